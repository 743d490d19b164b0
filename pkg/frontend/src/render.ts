/** DOM builders for the two task views. Text is inserted via text nodes only. */

import { Hint, Scale, TaskView } from "./api.js";

export interface FineControls {
  yes: HTMLButtonElement;
  no: HTMLButtonElement;
  nextHint: HTMLButtonElement;
  hintElements: HTMLElement[];
  setBusy(busy: boolean): void;
  markHint(index: number | null): void;
}

export interface CoarseControls {
  submit: HTMLButtonElement;
  comment: HTMLTextAreaElement;
  rating(): number | null;
  setBusy(busy: boolean): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function header(task: TaskView, positionLabel: string): HTMLElement {
  const bar = el("header", "bar");
  bar.appendChild(el("span", "position", positionLabel));
  const instructions = el("details", "instructions");
  instructions.appendChild(el("summary", "", "Instructions"));
  instructions.appendChild(el("p", "", task.instructions));
  bar.appendChild(instructions);
  return bar;
}

/** Summary text with the active unit wrapped in a <mark>. */
function summaryPane(task: TaskView): HTMLElement {
  const pane = el("section", "pane summary-pane");
  pane.appendChild(el("h2", "", "Summary"));
  const body = el("div", "text summary-text");
  if (task.active_span) {
    const [lo, hi] = task.active_span;
    body.appendChild(document.createTextNode(task.summary_text.slice(0, lo)));
    const mark = el("mark", "active-unit", task.summary_text.slice(lo, hi));
    body.appendChild(mark);
    body.appendChild(document.createTextNode(task.summary_text.slice(hi)));
  } else {
    body.textContent = task.summary_text;
  }
  pane.appendChild(body);
  return pane;
}

/** Source text with hint spans wrapped; returns the spans in hint order. */
function sourcePane(task: TaskView): { pane: HTMLElement; hintElements: HTMLElement[] } {
  const pane = el("section", "pane source-pane");
  pane.appendChild(el("h2", "", "Source document"));
  const body = el("div", "text source-text");
  const ordered = [...task.hints].sort((a, b) => a.span[0] - b.span[0]);
  const byHint = new Map<Hint, HTMLElement>();
  let cursor = 0;
  for (const hint of ordered) {
    const [lo, hi] = hint.span;
    if (lo < cursor) continue; // overlapping spans: keep the earlier one
    body.appendChild(document.createTextNode(task.source_text.slice(cursor, lo)));
    const span = el("span", "hint", task.source_text.slice(lo, hi));
    span.dataset.sentenceIndex = String(hint.sentence_index);
    body.appendChild(span);
    byHint.set(hint, span);
    cursor = hi;
  }
  body.appendChild(document.createTextNode(task.source_text.slice(cursor)));
  pane.appendChild(body);
  const hintElements = task.hints
    .map((h) => byHint.get(h))
    .filter((node): node is HTMLElement => node !== undefined);
  return { pane, hintElements };
}

export function renderFineTask(
  root: HTMLElement,
  task: TaskView,
  handlers: { onLabel(label: 0 | 1): void; onNextHint(): void },
): FineControls {
  root.replaceChildren();
  const position = `Unit ${task.position.index + 1} of ${task.position.total} (${task.summary_id})`;
  root.appendChild(header(task, position));

  const panes = el("main", "panes");
  panes.appendChild(summaryPane(task));
  const { pane, hintElements } = sourcePane(task);
  panes.appendChild(pane);
  root.appendChild(panes);

  const controls = el("footer", "controls");
  const yes = el("button", "yes", "Yes (y)");
  const no = el("button", "no", "No (n)");
  const nextHint = el("button", "next-hint", "Next Hint (h)");
  nextHint.disabled = hintElements.length === 0;
  yes.addEventListener("click", () => handlers.onLabel(1));
  no.addEventListener("click", () => handlers.onLabel(0));
  nextHint.addEventListener("click", () => handlers.onNextHint());
  controls.append(yes, no, nextHint);
  root.appendChild(controls);

  const markHint = (index: number | null) => {
    hintElements.forEach((node, i) => {
      node.classList.toggle("active-hint", i === index);
    });
    if (index !== null) {
      const target = hintElements[index];
      if (target && typeof target.scrollIntoView === "function") {
        target.scrollIntoView({ block: "center" });
      }
    }
  };

  return {
    yes,
    no,
    nextHint,
    hintElements,
    markHint,
    setBusy(busy: boolean) {
      yes.disabled = busy;
      no.disabled = busy;
    },
  };
}

/** Discrete buttons for small integer scales, range + number for wide ones. */
function ratingControl(scale: Scale, onChosen: () => void): {
  element: HTMLElement;
  rating(): number | null;
} {
  const steps = scale.max - scale.min;
  const discrete = Number.isInteger(scale.min) && Number.isInteger(scale.max) && steps <= 10;
  let chosen: number | null = null;

  if (discrete) {
    const group = el("div", "rating rating-buttons");
    for (let value = scale.min; value <= scale.max; value++) {
      const button = el("button", "rating-option", String(value));
      button.dataset.value = String(value);
      button.addEventListener("click", () => {
        chosen = value;
        group.querySelectorAll("button").forEach((b) => b.classList.remove("chosen"));
        button.classList.add("chosen");
        onChosen();
      });
      group.appendChild(button);
    }
    return { element: group, rating: () => chosen };
  }

  const group = el("div", "rating rating-range");
  const slider = el("input") as HTMLInputElement;
  slider.type = "range";
  slider.min = String(scale.min);
  slider.max = String(scale.max);
  const number = el("input") as HTMLInputElement;
  number.type = "number";
  number.min = String(scale.min);
  number.max = String(scale.max);
  const sync = (raw: string) => {
    const value = Number(raw);
    if (!Number.isFinite(value) || value < scale.min || value > scale.max) return;
    chosen = value;
    slider.value = raw;
    number.value = raw;
    onChosen();
  };
  slider.addEventListener("input", () => sync(slider.value));
  number.addEventListener("input", () => sync(number.value));
  group.append(slider, number);
  return { element: group, rating: () => chosen };
}

export function renderCoarseTask(
  root: HTMLElement,
  task: TaskView,
  handlers: { onSubmit(rating: number, comment: string): void },
): CoarseControls {
  root.replaceChildren();
  root.appendChild(header(task, `Summary rating (${task.summary_id})`));

  const panes = el("main", "panes");
  panes.appendChild(summaryPane(task));
  panes.appendChild(sourcePane(task).pane);
  root.appendChild(panes);

  const controls = el("footer", "controls coarse");
  const scale = task.scale ?? { min: 0, max: 5 };
  const submit = el("button", "submit", "Submit");
  submit.disabled = true; // no rating chosen yet
  const { element: ratingEl, rating } = ratingControl(scale, () => {
    submit.disabled = false;
  });
  const comment = el("textarea", "comment") as HTMLTextAreaElement;
  comment.placeholder = "Optional comment";
  submit.addEventListener("click", () => {
    const value = rating();
    if (value !== null) handlers.onSubmit(value, comment.value);
  });
  controls.append(ratingEl, comment, submit);
  root.appendChild(controls);

  return {
    submit,
    comment,
    rating,
    setBusy(busy: boolean) {
      submit.disabled = busy || rating() === null;
    },
  };
}

export function renderDone(root: HTMLElement): void {
  root.replaceChildren();
  const panel = el("div", "done");
  panel.appendChild(el("h2", "", "All tasks complete"));
  panel.appendChild(el("p", "", "Every assigned judgment has been recorded. Thank you."));
  root.appendChild(panel);
}

export function renderFatal(root: HTMLElement, message: string, onRetry: () => void): void {
  root.replaceChildren();
  const panel = el("div", "fatal");
  panel.appendChild(el("h2", "", "Something went wrong"));
  panel.appendChild(el("p", "", message));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", onRetry);
  panel.appendChild(retry);
  root.appendChild(panel);
}
