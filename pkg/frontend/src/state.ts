import type { ElementRow, NarrativeDoc, Positions } from "./types.js";

/** Tagged lines for one element, sorted ascending; absent elements yield []. */
export function linesFor(positions: Positions | null, element: string): number[] {
  if (!positions) return [];
  const lines = positions[element];
  if (!lines) return [];
  return [...lines].sort((a, b) => a - b);
}

/** True when the element has at least one tagged line. */
export function isPresent(positions: Positions | null, element: string): boolean {
  return linesFor(positions, element).length > 0;
}

/** Story-structure score: count of elements with at least one tagged line. */
export function presentCount(positions: Positions | null, elements: readonly string[]): number {
  return elements.filter((element) => isPresent(positions, element)).length;
}

/** All-absent positions over the given element codes. */
export function emptyPositions(elements: readonly string[]): Positions {
  const positions: Positions = {};
  for (const element of elements) positions[element] = null;
  return positions;
}

export function clonePositions(positions: Positions): Positions {
  const copy: Positions = {};
  for (const [element, lines] of Object.entries(positions)) {
    copy[element] = lines ? [...lines] : null;
  }
  return copy;
}

/** Equality up to ordering, with null, missing, and [] all meaning absent. */
export function positionsEqual(a: Positions | null, b: Positions | null, elements: readonly string[]): boolean {
  for (const element of elements) {
    const linesA = linesFor(a, element);
    const linesB = linesFor(b, element);
    if (linesA.length !== linesB.length) return false;
    if (linesA.some((line, i) => line !== linesB[i])) return false;
  }
  return true;
}

/**
 * Add the line to the element's set if missing, remove it if present.
 * Returns a new Positions; the input is never mutated. Emptied sets become null.
 */
export function togglePosition(positions: Positions, element: string, line: number): Positions {
  const next = clonePositions(positions);
  const current = linesFor(positions, element);
  const without = current.filter((candidate) => candidate !== line);
  const lines = without.length === current.length ? [...current, line].sort((a, b) => a - b) : without;
  next[element] = lines.length > 0 ? lines : null;
  return next;
}

/** Element rows whose buffer set tags the given line, in element-table order. */
export function rowsTaggingLine(
  table: readonly ElementRow[],
  positions: Positions | null,
  line: number,
): ElementRow[] {
  return table.filter((row) => linesFor(positions, row.element).includes(line));
}

/**
 * Local editing state for one narrative.
 *
 * `buffer` is the editable verified layer. `reference` is the last state known
 * to be on the server: the verified set when one exists, otherwise the model's
 * proposal that was pre-populated at load. The unsaved indicator is
 * buffer ≠ reference, so opening an unverified narrative starts clean and any
 * real edit trips it.
 */
export interface Editor {
  doc: NarrativeDoc;
  buffer: Positions;
  reference: Positions;
  version: number;
}

export function initEditor(doc: NarrativeDoc): Editor {
  const elements = doc.element_table.map((row) => row.element);
  const base = doc.verified_positions ?? doc.model_positions ?? emptyPositions(elements);
  return {
    doc,
    buffer: clonePositions(base),
    reference: clonePositions(base),
    version: doc.version,
  };
}

export function editorElements(editor: Editor): string[] {
  return editor.doc.element_table.map((row) => row.element);
}

export function isDirty(editor: Editor): boolean {
  return !positionsEqual(editor.buffer, editor.reference, editorElements(editor));
}

export function editorScore(editor: Editor): number {
  return presentCount(editor.buffer, editorElements(editor));
}

/** After a successful save the buffer becomes the new server-known state. */
export function markSaved(editor: Editor, version: number): Editor {
  return {
    ...editor,
    reference: clonePositions(editor.buffer),
    version,
    doc: { ...editor.doc, status: "verified" },
  };
}

/** Element codes mentioned in validation findings, e.g. "error:OutOfRangeIndex: A15: ...". */
export function elementsInFindings(details: readonly string[], elements: readonly string[]): string[] {
  const known = new Set(elements);
  const found = new Set<string>();
  for (const detail of details) {
    for (const match of detail.matchAll(/\bA\d{1,2}\b/g)) {
      if (known.has(match[0])) found.add(match[0]);
    }
  }
  return [...found].sort((a, b) => Number(a.slice(1)) - Number(b.slice(1)));
}
