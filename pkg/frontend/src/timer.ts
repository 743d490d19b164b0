/** Per-unit wall clock that only counts foreground-visible time. */

type Now = () => number;

export class VisibilityTimer {
  private accumulatedMs = 0;
  private runningSince: number | null = null;
  private readonly onVisibility = () => {
    if (this.doc.visibilityState === "hidden") {
      this.pause();
    } else {
      this.resume();
    }
  };

  constructor(
    private readonly doc: Document,
    private readonly now: Now = () => performance.now(),
  ) {
    doc.addEventListener("visibilitychange", this.onVisibility);
  }

  start(): void {
    this.accumulatedMs = 0;
    this.runningSince = this.doc.visibilityState === "hidden" ? null : this.now();
  }

  pause(): void {
    if (this.runningSince !== null) {
      this.accumulatedMs += this.now() - this.runningSince;
      this.runningSince = null;
    }
  }

  resume(): void {
    if (this.runningSince === null) {
      this.runningSince = this.now();
    }
  }

  /** Visible milliseconds so far; at least 1 so a judgment never reports 0. */
  elapsedMs(): number {
    const running = this.runningSince === null ? 0 : this.now() - this.runningSince;
    return Math.max(1, Math.round(this.accumulatedMs + running));
  }

  dispose(): void {
    this.doc.removeEventListener("visibilitychange", this.onVisibility);
  }
}
