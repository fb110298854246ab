import type { DvEntry, SlotRow } from "./types.js";

/**
 * The decision vector being edited between runs.
 *
 * Each slot is either resampled ("R") or keeps a specific problem
 * ("M"), mirroring the keep-and-rerun gesture: one click on a slot
 * card pins the problem currently shown there. The vector sent to the
 * API always has an M entry for exactly the kept slots.
 */
export class WorkingVector {
  // kept[i] is the pinned problem id for 1-based slot i+1, or null
  private kept: Array<string | null>;

  constructor(slotCount: number) {
    if (!Number.isInteger(slotCount) || slotCount < 1) {
      throw new Error(`slot count must be a positive integer, got ${slotCount}`);
    }
    this.kept = new Array(slotCount).fill(null);
  }

  /** Start from a drafted step, inheriting its pinned slots. */
  static fromSlots(slots: SlotRow[]): WorkingVector {
    const wv = new WorkingVector(slots.length);
    for (const [i, row] of slots.entries()) {
      if (row.pinned) {
        wv.kept[i] = row.problem_id;
      }
    }
    return wv;
  }

  get slotCount(): number {
    return this.kept.length;
  }

  private check(slotIndex: number): number {
    if (!Number.isInteger(slotIndex) || slotIndex < 1 || slotIndex > this.kept.length) {
      throw new Error(`slot ${slotIndex} out of range 1..${this.kept.length}`);
    }
    return slotIndex - 1;
  }

  isKept(slotIndex: number): boolean {
    return this.kept[this.check(slotIndex)] !== null;
  }

  keptProblem(slotIndex: number): string | null {
    return this.kept[this.check(slotIndex)] ?? null;
  }

  /** Pin a specific problem (the advanced picker path). */
  pin(slotIndex: number, problemId: string): void {
    this.kept[this.check(slotIndex)] = problemId;
  }

  release(slotIndex: number): void {
    this.kept[this.check(slotIndex)] = null;
  }

  /** Flip one slot between resample and keep-what-is-shown. */
  toggleKeep(slotIndex: number, shownProblemId: string): void {
    const i = this.check(slotIndex);
    this.kept[i] = this.kept[i] === null ? shownProblemId : null;
  }

  keptSlots(): number[] {
    const out: number[] = [];
    this.kept.forEach((pid, i) => {
      if (pid !== null) {
        out.push(i + 1);
      }
    });
    return out;
  }

  toJson(): DvEntry[] {
    return this.kept.map((pid) => (pid === null ? "R" : { M: pid }));
  }

  /** Compact display form, e.g. "[R M R R]". */
  label(): string {
    return `[${this.kept.map((pid) => (pid === null ? "R" : "M")).join(" ")}]`;
  }
}
