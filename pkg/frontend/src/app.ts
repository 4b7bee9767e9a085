import { ApiClient, ApiError } from "./api.js";
import {
  clonePositions,
  editorScore,
  elementsInFindings,
  initEditor,
  isDirty,
  markSaved,
  togglePosition,
  type Editor,
} from "./state.js";
import {
  el,
  formatProgress,
  renderElementTable,
  renderListRows,
  renderUtterances,
  type EditorHandlers,
} from "./view.js";
import type { NarrativeSummary, Progress } from "./types.js";

/**
 * The verification client: a narrative list plus an editor for one narrative
 * at a time. All server work is funneled through one promise chain, so at most
 * one request sequence is in flight and `idle()` awaits whatever is pending.
 */
export class ReviewApp {
  private readonly root: HTMLElement;
  private readonly client: ApiClient;
  private rows: NarrativeSummary[] = [];
  private progressDoc: Progress | null = null;
  private editor: Editor | null = null;
  private selectedLine = 1;
  private invalidElements: string[] = [];
  private errorLines: string[] = [];
  private conflictMessage = "";
  private noteMessage = "";
  private chain: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, client: ApiClient) {
    this.root = root;
    this.client = client;
    this.renderShell();
  }

  /** Serialize server interactions; surfaced errors never break the chain. */
  private enqueue(task: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(task).catch((error: unknown) => {
      this.errorLines = [error instanceof Error ? error.message : String(error)];
      this.renderEditor();
    });
    return this.chain;
  }

  /** Resolves once every queued server interaction has settled. */
  idle(): Promise<void> {
    return this.chain;
  }

  get currentNarrativeId(): string | null {
    return this.editor?.doc.narrative_id ?? null;
  }

  isDirty(): boolean {
    return this.editor !== null && isDirty(this.editor);
  }

  /** Edit buffer of the open narrative (a defensive copy), for tests and debugging. */
  bufferSnapshot(): ReturnType<typeof clonePositions> | null {
    return this.editor ? clonePositions(this.editor.buffer) : null;
  }

  start(): Promise<void> {
    return this.enqueue(async () => {
      await this.refreshList();
    });
  }

  open(narrativeId: string): Promise<void> {
    return this.enqueue(async () => {
      const doc = await this.client.getNarrative(narrativeId);
      this.editor = initEditor(doc);
      this.selectedLine = doc.utterances.length > 0 ? 1 : 0;
      this.invalidElements = [];
      this.errorLines = [];
      this.conflictMessage = "";
      this.noteMessage = "";
      this.renderEditor();
    });
  }

  toggle(element: string, line: number): void {
    if (!this.editor) return;
    this.editor = { ...this.editor, buffer: togglePosition(this.editor.buffer, element, line) };
    this.invalidElements = [];
    this.errorLines = [];
    this.noteMessage = "";
    this.renderEditor();
  }

  selectLine(line: number): void {
    if (!this.editor) return;
    const count = this.editor.doc.utterances.length;
    if (count === 0) return;
    this.selectedLine = Math.min(Math.max(line, 1), count);
    this.renderEditor();
  }

  moveSelection(delta: number): void {
    this.selectLine(this.selectedLine + delta);
  }

  save(): Promise<void> {
    return this.enqueue(async () => {
      if (!this.editor) return;
      const { doc, buffer, version } = this.editor;
      this.errorLines = [];
      this.invalidElements = [];
      this.conflictMessage = "";
      try {
        const saved = await this.client.putVerified(doc.narrative_id, buffer, version);
        this.editor = markSaved(this.editor, saved.version);
        this.noteMessage = `saved · score ${saved.score}`;
        this.renderEditor();
        await this.refreshList();
      } catch (error) {
        if (error instanceof ApiError && error.status === 409) {
          const current = error.currentVersion;
          this.conflictMessage =
            `Save rejected: the narrative changed on the server` +
            `${current === null ? "" : ` (now version ${current})`}. ` +
            `Reloaded the server's copy; your unsaved edits were discarded.`;
          const fresh = await this.client.getNarrative(doc.narrative_id);
          this.editor = initEditor(fresh);
          this.renderEditor();
        } else if (error instanceof ApiError && error.status === 400) {
          this.errorLines = error.details;
          this.invalidElements = elementsInFindings(
            error.details,
            this.editor.doc.element_table.map((row) => row.element),
          );
          this.renderEditor();
        } else {
          this.errorLines = [error instanceof Error ? error.message : String(error)];
          this.renderEditor();
        }
      }
    });
  }

  sendHeartbeat(seconds: number): Promise<void> {
    return this.enqueue(async () => {
      if (!this.editor) return;
      await this.client.heartbeat(this.editor.doc.narrative_id, seconds);
    });
  }

  handleKey(event: KeyboardEvent): void {
    if (!this.editor) return;
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
    if (event.key === "ArrowDown") {
      event.preventDefault();
      this.moveSelection(1);
    } else if (event.key === "ArrowUp") {
      event.preventDefault();
      this.moveSelection(-1);
    } else if (event.key === "s" && (event.ctrlKey || event.metaKey)) {
      event.preventDefault();
      void this.save();
    }
  }

  private async refreshList(): Promise<void> {
    this.rows = await this.client.listNarratives();
    this.progressDoc = await this.client.progress();
    this.renderList();
  }

  private renderShell(): void {
    this.root.textContent = "";
    this.root.append(
      el(
        "header",
        { class: "topbar" },
        el("h1", {}, "Narrative verification"),
        el("span", { id: "progress" }, ""),
      ),
      el(
        "main",
        {},
        el(
          "section",
          { id: "list-pane" },
          el(
            "table",
            { id: "narrative-list" },
            el(
              "thead",
              {},
              el(
                "tr",
                {},
                el("th", {}, "Narrative"),
                el("th", {}, "Story"),
                el("th", {}, "Cohort"),
                el("th", {}, "Status"),
                el("th", {}, "Model"),
                el("th", {}, "Verified"),
              ),
            ),
            el("tbody", {}),
          ),
        ),
        el("section", { id: "editor-pane", class: "hidden" }),
      ),
    );
  }

  private renderList(): void {
    const table = this.root.querySelector("#narrative-list");
    if (table) {
      const body = renderListRows(this.rows, (narrativeId) => void this.open(narrativeId));
      table.querySelector("tbody")?.replaceWith(body);
    }
    const progress = this.root.querySelector("#progress");
    if (progress) {
      progress.textContent = this.progressDoc ? formatProgress(this.progressDoc) : "";
    }
  }

  private renderEditor(): void {
    const pane = this.root.querySelector("#editor-pane");
    if (!(pane instanceof HTMLElement)) return;
    pane.textContent = "";
    if (!this.editor) {
      pane.classList.add("hidden");
      return;
    }
    pane.classList.remove("hidden");
    const { doc } = this.editor;
    const handlers: EditorHandlers = {
      onToggle: (element, line) => this.toggle(element, line),
      onSelectLine: (line) => this.selectLine(line),
    };

    const saveButton = el("button", { id: "save", type: "button" }, "Save verified") as HTMLButtonElement;
    saveButton.addEventListener("click", () => void this.save());

    const head = el(
      "div",
      { id: "editor-head" },
      el("h2", { id: "narrative-title" }, doc.narrative_id),
      el("span", { id: "narrative-meta" }, `${doc.story ?? "—"} · ${doc.cohort ?? "—"}`),
      el("span", { id: "status-badge", class: `status-${this.editor.doc.status}` }, this.editor.doc.status),
      el("span", { id: "score" }, `${editorScore(this.editor)} / ${doc.element_table.length}`),
      el("span", { id: "dirty", class: this.isDirty() ? "" : "hidden" }, "unsaved changes"),
      saveButton,
    );
    if (this.noteMessage) head.append(el("span", { id: "save-note" }, this.noteMessage));

    pane.append(head);
    if (this.conflictMessage) {
      pane.append(el("div", { id: "conflict", class: "banner" }, this.conflictMessage));
    }
    if (this.errorLines.length > 0) {
      const list = el("ul", {});
      for (const line of this.errorLines) list.append(el("li", {}, line));
      pane.append(el("div", { id: "error", class: "banner" }, list));
    }
    pane.append(
      renderUtterances(doc, this.editor.buffer, this.selectedLine, handlers),
      renderElementTable(doc, this.editor.buffer, this.selectedLine, this.invalidElements, handlers),
    );
  }
}
