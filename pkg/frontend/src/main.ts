import { ApiClient } from "./api.js";
import { ReviewApp } from "./app.js";

const HEARTBEAT_SECONDS = 15;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const client = new ApiClient((url, init) => window.fetch(url, init));
const app = new ReviewApp(root, client);
void app.start();

// Review time is active time: only report while a narrative is open and the tab focused.
window.setInterval(() => {
  if (app.currentNarrativeId !== null && document.hasFocus()) {
    void app.sendHeartbeat(HEARTBEAT_SECONDS);
  }
}, HEARTBEAT_SECONDS * 1000);

document.addEventListener("keydown", (event) => app.handleKey(event));

window.addEventListener("beforeunload", (event) => {
  if (app.isDirty()) {
    event.preventDefault();
    event.returnValue = "";
  }
});
