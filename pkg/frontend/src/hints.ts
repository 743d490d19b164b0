/** Cursor over the highlighted hints; wraps modulo the hint count. */

export class HintCycler {
  private cursor = 0;

  constructor(readonly count: number) {}

  /** Index of the currently marked hint, or null when there are none. */
  get current(): number | null {
    return this.count > 0 ? this.cursor : null;
  }

  /** Advance and return the new index; `count` presses return to the start. */
  next(): number | null {
    if (this.count === 0) return null;
    this.cursor = (this.cursor + 1) % this.count;
    return this.cursor;
  }
}
