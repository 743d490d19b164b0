/** Typed client for the annotation service JSON API. */

export interface Hint {
  sentence_index: number;
  span: [number, number];
}

export interface Scale {
  min: number;
  max: number;
}

export interface TaskView {
  project_id: string;
  mode: "FINE" | "COARSE";
  summary_id: string;
  annotator_slot: number;
  hint_mode: string;
  instructions: string;
  summary_text: string;
  source_doc_id: string;
  source_text: string;
  position: { index: number; total: number };
  unit_index?: number;
  unit_text?: string;
  active_span?: [number, number];
  hints: Hint[];
  scale?: Scale;
}

export interface NextTaskResponse {
  done: boolean;
  task?: TaskView;
}

export interface FineSubmission {
  kind: "fine";
  summary_id: string;
  unit_index: number;
  annotator_slot: number;
  label: 0 | 1;
  elapsed_ms: number;
}

export interface CoarseSubmission {
  kind: "coarse";
  summary_id: string;
  annotator_slot: number;
  rating: number;
  comment?: string;
  elapsed_ms?: number;
}

export type Submission = FineSubmission | CoarseSubmission;

export interface Ack {
  ok: boolean;
  record_id: number;
  submitted_at: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly base: string,
    readonly projectId: string,
    readonly slot: number,
    readonly token: string,
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async nextTask(): Promise<NextTaskResponse> {
    const url =
      `${this.base}/projects/${encodeURIComponent(this.projectId)}/tasks/next` +
      `?slot=${this.slot}&token=${encodeURIComponent(this.token)}`;
    const response = await this.fetchFn(url);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as NextTaskResponse;
  }

  async submit(payload: Submission): Promise<Ack> {
    const url = `${this.base}/projects/${encodeURIComponent(this.projectId)}/judgments`;
    const response = await this.fetchFn(url, {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Annotator-Token": this.token },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as Ack;
  }
}
