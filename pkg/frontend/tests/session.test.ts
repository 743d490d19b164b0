import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationSession } from "../src/session.js";
import type { TaskView } from "../src/api.js";

/** In-memory stand-in for the annotation service, same wire contract. */
class FakeService {
  judgments: Array<Record<string, unknown>> = [];
  failNextSubmit = false;
  private keys = new Set<string>();

  constructor(
    readonly mode: "FINE" | "COARSE",
    readonly tasks: TaskView[],
  ) {}

  private pendingTasks(): TaskView[] {
    return this.tasks.filter((task) => {
      const key =
        task.mode === "FINE"
          ? `${task.summary_id}/${task.unit_index}/${task.annotator_slot}`
          : `${task.summary_id}/${task.annotator_slot}`;
      return !this.keys.has(key);
    });
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    if (url.includes("/tasks/next")) {
      const pending = this.pendingTasks();
      const body = pending.length
        ? { done: false, task: { ...pending[0], position: { index: 0, total: this.tasks.length } } }
        : { done: true };
      return json(200, body);
    }
    if (url.includes("/judgments")) {
      if (this.failNextSubmit) {
        this.failNextSubmit = false;
        throw new TypeError("network down");
      }
      const payload = JSON.parse(String(init?.body)) as Record<string, unknown>;
      const key =
        payload.kind === "fine"
          ? `${payload.summary_id}/${payload.unit_index}/${payload.annotator_slot}`
          : `${payload.summary_id}/${payload.annotator_slot}`;
      if (this.keys.has(key)) return json(409, { detail: "duplicate judgment" });
      this.keys.add(key);
      this.judgments.push(payload);
      return json(200, { ok: true, record_id: this.judgments.length - 1, submitted_at: "t" });
    }
    return json(404, { detail: `no fake route for ${url}` });
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const SOURCE = "Sentence zero here. Sentence one follows. Sentence two closes the document.";

function fineTask(unitIndex: number, hintCount = 3): TaskView {
  const spans: Array<[number, number]> = [
    [0, 19],
    [20, 42],
    [43, SOURCE.length],
  ];
  return {
    project_id: "p1",
    mode: "FINE",
    summary_id: "s1",
    annotator_slot: 0,
    hint_mode: hintCount ? "ALGORITHMIC" : "NONE",
    instructions: "Judge the highlighted span.",
    summary_text: "First claim here. Second claim there.",
    source_doc_id: "d1",
    source_text: SOURCE,
    position: { index: unitIndex, total: 2 },
    unit_index: unitIndex,
    unit_text: unitIndex === 0 ? "First claim here." : "Second claim there.",
    active_span: unitIndex === 0 ? [0, 17] : [18, 37],
    hints: spans.slice(0, hintCount).map((span, i) => ({ sentence_index: i, span })),
  };
}

function coarseTask(): TaskView {
  return {
    project_id: "p2",
    mode: "COARSE",
    summary_id: "s9",
    annotator_slot: 1,
    hint_mode: "NONE",
    instructions: "Rate the whole summary.",
    summary_text: "A complete summary to rate.",
    source_doc_id: "d9",
    source_text: SOURCE,
    position: { index: 0, total: 1 },
    hints: [],
    scale: { min: 0, max: 5 },
  };
}

function makeSession(service: FakeService): { root: HTMLElement; session: AnnotationSession } {
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  const api = new ApiClient("http://fake", service.mode === "FINE" ? "p1" : "p2", 0, "tok", service.fetch);
  return { root, session: new AnnotationSession(api, root) };
}

function click(root: HTMLElement, selector: string): void {
  const node = root.querySelector<HTMLButtonElement>(selector);
  if (!node) throw new Error(`no element ${selector}`);
  node.click();
}

beforeEach(() => {
  document.body.replaceChildren();
});

describe("fine session", () => {
  it("marks the active unit and submits Yes with positive elapsed time", async () => {
    const service = new FakeService("FINE", [fineTask(0), fineTask(1)]);
    const { root, session } = makeSession(service);
    await session.start();

    expect(root.querySelector("mark.active-unit")?.textContent).toBe("First claim here.");
    click(root, "button.yes");
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));

    const judgment = service.judgments[0]!;
    expect(judgment.kind).toBe("fine");
    expect(judgment.label).toBe(1);
    expect(judgment.unit_index).toBe(0);
    expect(judgment.elapsed_ms as number).toBeGreaterThan(0);
    // Advanced to the second unit.
    await vi.waitFor(() =>
      expect(root.querySelector("mark.active-unit")?.textContent).toBe("Second claim there."),
    );
  });

  it("finishes with a done screen and an export matching every submission", async () => {
    const service = new FakeService("FINE", [fineTask(0), fineTask(1)]);
    const { root, session } = makeSession(service);
    await session.start();

    click(root, "button.yes");
    await vi.waitFor(() =>
      expect(root.querySelector("mark.active-unit")?.textContent).toBe("Second claim there."),
    );
    click(root, "button.no");
    await vi.waitFor(() => expect(service.judgments).toHaveLength(2));
    await vi.waitFor(() => expect(root.querySelector(".done")).not.toBeNull());

    expect(service.judgments.map((j) => j.label)).toEqual([1, 0]);
    expect(service.judgments.every((j) => (j.elapsed_ms as number) > 0)).toBe(true);
  });

  it("cycles hints through exactly |highlights| positions before repeating", async () => {
    const service = new FakeService("FINE", [fineTask(0, 3)]);
    const { root, session } = makeSession(service);
    await session.start();

    const activeHint = () =>
      [...root.querySelectorAll("span.hint")].findIndex((node) =>
        node.classList.contains("active-hint"),
      );
    expect(activeHint()).toBe(0); // first hint marked on render
    const visited: number[] = [];
    for (let press = 0; press < 3; press++) {
      click(root, "button.next-hint");
      visited.push(activeHint());
    }
    expect(visited).toEqual([1, 2, 0]); // back to the first highlight
    expect(new Set(visited).size).toBe(3);
  });

  it("disables Next Hint when the task has no hints", async () => {
    const service = new FakeService("FINE", [fineTask(0, 0)]);
    const { root, session } = makeSession(service);
    await session.start();
    expect(root.querySelector<HTMLButtonElement>("button.next-hint")?.disabled).toBe(true);
  });

  it("keeps controls disabled until the ack arrives", async () => {
    const service = new FakeService("FINE", [fineTask(0)]);
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const slowFetch: typeof service.fetch = async (input, init) => {
      if (String(input).includes("/judgments")) await gate;
      return service.fetch(input, init);
    };
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const api = new ApiClient("http://fake", "p1", 0, "tok", slowFetch);
    const session = new AnnotationSession(api, root);
    await session.start();

    click(root, "button.yes");
    expect(root.querySelector<HTMLButtonElement>("button.yes")?.disabled).toBe(true);
    expect(root.querySelector<HTMLButtonElement>("button.no")?.disabled).toBe(true);
    release();
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));
  });

  it("offers a retry that preserves the judgment after a network failure", async () => {
    const service = new FakeService("FINE", [fineTask(0)]);
    service.failNextSubmit = true;
    const { root, session } = makeSession(service);
    await session.start();

    click(root, "button.yes");
    await vi.waitFor(() => expect(root.querySelector(".submit-error")).not.toBeNull());
    expect(root.querySelector<HTMLButtonElement>("button.yes")?.disabled).toBe(false);

    click(root, "button.yes");
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));
    expect(service.judgments[0]!.label).toBe(1);
  });

  it("supports y/n keyboard shortcuts but leaves modified keys alone", async () => {
    const service = new FakeService("FINE", [fineTask(0), fineTask(1)]);
    const { session } = makeSession(service);
    await session.start();

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "f", ctrlKey: true }));
    expect(service.judgments).toHaveLength(0);

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "y" }));
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));
    expect(service.judgments[0]!.label).toBe(1);
  });

  it("treats a duplicate response as already stored and advances", async () => {
    const task = fineTask(0);
    const service = new FakeService("FINE", [task]);
    const dupFetch: typeof service.fetch = async (input, init) => {
      if (String(input).includes("/judgments")) return json(409, { detail: "duplicate judgment" });
      return service.fetch(input, init);
    };
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const api = new ApiClient("http://fake", "p1", 0, "tok", dupFetch);
    const session = new AnnotationSession(api, root);
    await session.start();

    click(root, "button.yes");
    // The fake never records the judgment, so the queue never drains; the
    // session must still move on rather than resubmitting forever.
    await vi.waitFor(() => expect(root.querySelector("button.yes")).not.toBeNull());
    expect(root.querySelector(".submit-error")).toBeNull();
  });
});

describe("coarse session", () => {
  it("blocks submission until a rating is chosen, then round-trips rating and comment", async () => {
    const service = new FakeService("COARSE", [coarseTask()]);
    const { root, session } = makeSession(service);
    await session.start();

    const submit = root.querySelector<HTMLButtonElement>("button.submit")!;
    expect(submit.disabled).toBe(true);
    submit.click();
    expect(service.judgments).toHaveLength(0);

    const four = [...root.querySelectorAll<HTMLButtonElement>("button.rating-option")].find(
      (b) => b.textContent === "4",
    )!;
    four.click();
    expect(submit.disabled).toBe(false);

    const comment = root.querySelector<HTMLTextAreaElement>("textarea.comment")!;
    comment.value = "solid but misses one fact";
    submit.click();
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));

    const judgment = service.judgments[0]!;
    expect(judgment.kind).toBe("coarse");
    expect(judgment.rating).toBe(4);
    expect(judgment.comment).toBe("solid but misses one fact");
    await vi.waitFor(() => expect(root.querySelector(".done")).not.toBeNull());
  });

  it("renders the 0-5 scale as six discrete options", async () => {
    const service = new FakeService("COARSE", [coarseTask()]);
    const { root, session } = makeSession(service);
    await session.start();
    const options = [...root.querySelectorAll("button.rating-option")].map((b) => b.textContent);
    expect(options).toEqual(["0", "1", "2", "3", "4", "5"]);
  });

  it("renders a wide scale as slider plus number input", async () => {
    const task = { ...coarseTask(), scale: { min: 1, max: 100 } };
    const service = new FakeService("COARSE", [task]);
    const { root, session } = makeSession(service);
    await session.start();
    expect(root.querySelector("input[type=range]")).not.toBeNull();
    expect(root.querySelector("input[type=number]")).not.toBeNull();
  });
});
