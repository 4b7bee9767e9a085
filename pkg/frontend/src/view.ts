import type { ElementRow, NarrativeDoc, NarrativeSummary, Positions, Progress } from "./types.js";
import { isPresent, linesFor } from "./state.js";

type Child = Node | string;

/** Small DOM builder: el("td", {class: "lines"}, "13, 15"). */
export function el(
  tag: string,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) {
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

export function formatLines(lines: number[]): string {
  return lines.length > 0 ? lines.join(", ") : "—";
}

export function formatProgress(progress: Progress): string {
  const minutes = (progress.review_seconds_total / 60).toFixed(1);
  return `${progress.verified} / ${progress.total} verified · ${minutes} min reviewed`;
}

export function renderListRows(
  rows: NarrativeSummary[],
  onOpen: (narrativeId: string) => void,
): HTMLTableSectionElement {
  const body = document.createElement("tbody");
  for (const row of rows) {
    const tr = el(
      "tr",
      { "data-nid": row.narrative_id, class: `status-${row.status}` },
      el("td", { class: "nid" }, row.narrative_id),
      el("td", {}, row.story ?? "—"),
      el("td", {}, row.cohort ?? "—"),
      el("td", { class: "status" }, row.status),
      el("td", { class: "num" }, row.score_model === null ? "—" : String(row.score_model)),
      el("td", { class: "num" }, row.score_verified === null ? "—" : String(row.score_verified)),
    );
    tr.addEventListener("click", () => onOpen(row.narrative_id));
    body.append(tr);
  }
  return body as HTMLTableSectionElement;
}

export interface EditorHandlers {
  onToggle(element: string, line: number): void;
  onSelectLine(line: number): void;
}

/**
 * One chip per element tagging the line in either the edit buffer or the
 * model's proposal. Chips in the buffer get class "on"; model-proposed chips
 * get class "model", so a proposal toggled off stays visible as a ghost.
 */
function renderChips(
  table: readonly ElementRow[],
  buffer: Positions,
  model: Positions | null,
  line: number,
  handlers: EditorHandlers,
): HTMLElement {
  const chips = el("span", { class: "chips" });
  for (const row of table) {
    const inBuffer = linesFor(buffer, row.element).includes(line);
    const inModel = linesFor(model, row.element).includes(line);
    if (!inBuffer && !inModel) continue;
    const classes = ["chip"];
    if (inBuffer) classes.push("on");
    if (inModel) classes.push("model");
    const chip = el(
      "button",
      {
        class: classes.join(" "),
        type: "button",
        "data-element": row.element,
        title: `${row.name} (${row.element}) — click to ${inBuffer ? "remove" : "restore"}`,
      },
      row.label,
    );
    chip.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.onToggle(row.element, line);
    });
    chips.append(chip);
  }
  return chips;
}

export function renderUtterances(
  doc: NarrativeDoc,
  buffer: Positions,
  selectedLine: number,
  handlers: EditorHandlers,
): HTMLOListElement {
  const list = el("ol", { id: "utterances" }) as HTMLOListElement;
  for (const utterance of doc.utterances) {
    const item = el(
      "li",
      {
        class: `utterance${utterance.index === selectedLine ? " selected" : ""}`,
        "data-line": String(utterance.index),
        title: utterance.raw === utterance.clean ? "" : `original: ${utterance.raw}`,
      },
      el("span", { class: "line-no" }, String(utterance.index)),
      el("span", { class: "text" }, utterance.clean),
      renderChips(doc.element_table, buffer, doc.model_positions, utterance.index, handlers),
    );
    item.addEventListener("click", () => handlers.onSelectLine(utterance.index));
    list.append(item);
  }
  return list;
}

function humanSummary(doc: NarrativeDoc, element: string): string {
  const humans = doc.human_positions ?? {};
  const parts = Object.keys(humans)
    .sort()
    .map((rater) => `${rater}: ${formatLines(linesFor(humans[rater] ?? null, element))}`);
  return parts.join(" · ");
}

export function renderElementTable(
  doc: NarrativeDoc,
  buffer: Positions,
  selectedLine: number,
  invalidElements: readonly string[],
  handlers: EditorHandlers,
): HTMLTableElement {
  const disagreements = new Set(doc.disagreement_elements ?? []);
  const invalid = new Set(invalidElements);
  const table = el("table", { id: "elements" }) as HTMLTableElement;
  table.append(
    el(
      "thead",
      {},
      el(
        "tr",
        {},
        el("th", {}, "Ep."),
        el("th", {}, "Element"),
        el("th", {}, "Name"),
        el("th", {}, "Lines"),
        el("th", {}, ""),
      ),
    ),
  );
  const body = el("tbody", {});
  for (const row of doc.element_table) {
    const lines = linesFor(buffer, row.element);
    const classes = [isPresent(buffer, row.element) ? "present" : "absent"];
    if (disagreements.has(row.element)) classes.push("disagree");
    if (invalid.has(row.element)) classes.push("invalid");
    const tagButton = el(
      "button",
      { class: "tag-here", type: "button" },
      lines.includes(selectedLine) ? `untag line ${selectedLine}` : `tag line ${selectedLine}`,
    );
    tagButton.addEventListener("click", () => handlers.onToggle(row.element, selectedLine));
    const nameCell = el("td", { class: "name", title: row.description }, row.name);
    if (disagreements.has(row.element)) {
      nameCell.append(
        el("span", { class: "disagree-mark", title: `raters disagree — ${humanSummary(doc, row.element)}` }, " ⚠"),
      );
    }
    body.append(
      el(
        "tr",
        { "data-element": row.element, class: classes.join(" ") },
        el("td", { class: "ep" }, row.episode === null ? "—" : String(row.episode)),
        el("td", { class: "label" }, row.label),
        nameCell,
        el("td", { class: "lines" }, formatLines(lines)),
        el("td", { class: "toggle" }, tagButton),
      ),
    );
  }
  table.append(body);
  return table;
}
