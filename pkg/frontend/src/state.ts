import type { Report, Thresholds, ThresholdsDraft } from "./types.js";

export const SENSITIVITY_CATEGORIES = [
  "block_audible",
  "block_silent",
  "prolongation",
  "sound_repetition",
  "syllable_repetition",
  "word_repetition",
] as const;

export function clamp01(value: number): number {
  if (value < 0) return 0;
  if (value > 1) return 1;
  return value;
}

/**
 * Client-side session state. The draft is the only thing the console ever
 * sends to the server, so the [0,1] bound is enforced here at the single
 * write point rather than scattered over the UI handlers.
 */
export class ConsoleState {
  reportId: string | null = null;
  lastVersion = 0;
  draft: ThresholdsDraft;
  /** Verdict posts in flight, keyed by event id. */
  readonly pendingVerdicts = new Set<string>();
  private displayedEvents = new Set<string>();

  constructor() {
    const sensitivity: Record<string, number> = {};
    for (const cat of SENSITIVITY_CATEGORIES) sensitivity[cat] = 0.5;
    this.draft = { sensitivity, open_set_threshold: 0.6 };
  }

  /** Adopt the thresholds a report was last produced with. */
  seedDraft(thresholds: Thresholds): void {
    for (const cat of SENSITIVITY_CATEGORIES) {
      const v = thresholds.sensitivity[cat];
      if (typeof v === "number" && Number.isFinite(v)) {
        this.draft.sensitivity[cat] = clamp01(v);
      }
    }
    if (Number.isFinite(thresholds.open_set_threshold)) {
      this.draft.open_set_threshold = clamp01(thresholds.open_set_threshold);
    }
  }

  /**
   * Returns the stored value. Unknown categories and non-finite input are
   * rejected so a malformed draft can never reach the server.
   */
  setSensitivity(category: string, value: number): number {
    const current = this.draft.sensitivity[category];
    if (current === undefined) throw new Error(`unknown category: ${category}`);
    if (!Number.isFinite(value)) return current;
    const clamped = clamp01(value);
    this.draft.sensitivity[category] = clamped;
    return clamped;
  }

  setOpenSetThreshold(value: number): number {
    if (!Number.isFinite(value)) return this.draft.open_set_threshold;
    const clamped = clamp01(value);
    this.draft.open_set_threshold = clamped;
    return clamped;
  }

  adoptReport(report: Report): void {
    this.reportId = report.report_id;
    this.lastVersion = report.version;
    this.displayedEvents = new Set(report.events.map((e) => e.event_id));
  }

  isDisplayed(eventId: string): boolean {
    return this.displayedEvents.has(eventId);
  }

  /** Pending verdicts may only reference events currently on screen. */
  beginVerdict(eventId: string): void {
    if (!this.displayedEvents.has(eventId)) {
      throw new Error(`event not displayed: ${eventId}`);
    }
    this.pendingVerdicts.add(eventId);
  }

  endVerdict(eventId: string): void {
    this.pendingVerdicts.delete(eventId);
  }
}
