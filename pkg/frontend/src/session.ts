/** One annotator's task loop: fetch, render, judge, submit, advance.
 *
 * The unit timer counts foreground-visible time only and survives render
 * retries; controls stay disabled from submit until the server ack, so a
 * judgment can never be sent twice. Submission failures re-enable the
 * controls for a retry instead of dropping the judgment.
 */

import { ApiClient, ApiError, Submission, TaskView } from "./api.js";
import { HintCycler } from "./hints.js";
import {
  CoarseControls,
  FineControls,
  renderCoarseTask,
  renderDone,
  renderFatal,
  renderFineTask,
} from "./render.js";
import { VisibilityTimer } from "./timer.js";

export class AnnotationSession {
  private task: TaskView | null = null;
  private hints: HintCycler = new HintCycler(0);
  private fine: FineControls | null = null;
  private coarse: CoarseControls | null = null;
  private readonly timer: VisibilityTimer;
  private readonly onKey = (event: KeyboardEvent) => this.handleKey(event);

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    doc: Document = document,
  ) {
    this.timer = new VisibilityTimer(doc);
    doc.addEventListener("keydown", this.onKey);
  }

  async start(): Promise<void> {
    await this.advance();
  }

  private async advance(): Promise<void> {
    let response;
    try {
      response = await this.api.nextTask();
    } catch (error) {
      renderFatal(this.root, String(error), () => void this.advance());
      return;
    }
    if (response.done || !response.task) {
      this.task = null;
      renderDone(this.root);
      return;
    }
    this.task = response.task;
    this.hints = new HintCycler(this.task.hints.length);
    this.renderCurrent();
    this.timer.start();
  }

  /** Re-renders the current task; does not touch the timer (render retries
   *  must not lose accumulated time). */
  renderCurrent(): void {
    if (!this.task) return;
    try {
      if (this.task.mode === "FINE") {
        this.coarse = null;
        this.fine = renderFineTask(this.root, this.task, {
          onLabel: (label) => void this.submitFine(label),
          onNextHint: () => this.cycleHint(),
        });
        this.fine.markHint(this.hints.current);
      } else {
        this.fine = null;
        this.coarse = renderCoarseTask(this.root, this.task, {
          onSubmit: (rating, comment) => void this.submitCoarse(rating, comment),
        });
      }
    } catch (error) {
      renderFatal(this.root, `Render failed: ${String(error)}`, () => this.renderCurrent());
    }
  }

  private cycleHint(): void {
    this.fine?.markHint(this.hints.next());
  }

  private handleKey(event: KeyboardEvent): void {
    // Leave browser chrome alone, in particular Ctrl+F searches in the source.
    if (event.ctrlKey || event.metaKey || event.altKey) return;
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "TEXTAREA" || target.tagName === "INPUT")) return;
    if (!this.task || this.task.mode !== "FINE" || !this.fine) return;
    if (event.key === "y" && !this.fine.yes.disabled) void this.submitFine(1);
    else if (event.key === "n" && !this.fine.no.disabled) void this.submitFine(0);
    else if (event.key === "h" && !this.fine.nextHint.disabled) this.cycleHint();
  }

  private async submitFine(label: 0 | 1): Promise<void> {
    if (!this.task || this.task.unit_index === undefined || !this.fine) return;
    this.timer.pause();
    const payload: Submission = {
      kind: "fine",
      summary_id: this.task.summary_id,
      unit_index: this.task.unit_index,
      annotator_slot: this.task.annotator_slot,
      label,
      elapsed_ms: this.timer.elapsedMs(),
    };
    await this.deliver(payload, this.fine);
  }

  private async submitCoarse(rating: number, comment: string): Promise<void> {
    if (!this.task || !this.coarse) return;
    this.timer.pause();
    const payload: Submission = {
      kind: "coarse",
      summary_id: this.task.summary_id,
      annotator_slot: this.task.annotator_slot,
      rating,
      comment: comment.trim() === "" ? undefined : comment,
      elapsed_ms: this.timer.elapsedMs(),
    };
    await this.deliver(payload, this.coarse);
  }

  private async deliver(payload: Submission, controls: FineControls | CoarseControls): Promise<void> {
    controls.setBusy(true);
    try {
      await this.api.submit(payload);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Already stored (e.g. an earlier ack was lost on the network).
        await this.advance();
        return;
      }
      this.showSubmitError(String(error));
      controls.setBusy(false);
      this.timer.resume();
      return;
    }
    this.clearSubmitError();
    await this.advance();
  }

  private showSubmitError(message: string): void {
    let banner = this.root.querySelector(".submit-error");
    if (!banner) {
      banner = document.createElement("div");
      banner.className = "submit-error";
      this.root.prepend(banner);
    }
    banner.textContent = `Submission failed, judgment kept: ${message}`;
  }

  private clearSubmitError(): void {
    this.root.querySelector(".submit-error")?.remove();
  }
}
