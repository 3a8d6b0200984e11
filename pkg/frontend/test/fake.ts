import { ApiError } from "../src/api.js";
import type { ConsoleApi, FetchedReport } from "../src/api.js";
import { SENSITIVITY_CATEGORIES } from "../src/state.js";
import type { EventRecord, Report, ReportSummary, ThresholdsDraft, VerdictRecord } from "../src/types.js";

export function makeEvent(partial: Partial<EventRecord> & { event_id: string }): EventRecord {
  return {
    category: partial.event_id.split(":")[0] ?? "prolongation",
    start_frame: 10,
    end_frame: 20,
    start_s: 0.16,
    end_s: 0.32,
    raw_score: 0.8,
    calibrated_confidence: 0.8,
    severity: "high",
    contributing_edit_ops: [0],
    attribution: { mel: 0.2, pitch: 0.1, energy: 0.05, mfcc: 0.15 },
    ...partial,
  };
}

export function makeReport(partial: Partial<Report> = {}): Report {
  const sensitivity: Record<string, number> = {};
  for (const cat of SENSITIVITY_CATEGORIES) sensitivity[cat] = 0.5;
  return {
    report_id: "feedc0ffee01",
    version: 1,
    audio: { path: "case_0000.wav", duration_s: 4.5, sample_rate: 16000 },
    transcript: { phones: ["ba", "da"], word_boundaries: [0], source_text: "ba da" },
    frame_rate: 62.5,
    alignment: [
      { symbol: "ba", start_s: 0.1, end_s: 0.4, mean_posterior: 0.91 },
      { symbol: "da", start_s: 0.5, end_s: 0.8, mean_posterior: 0.88 },
    ],
    edit_ops: [],
    candidates: [],
    events: [],
    atypicality: 0.05,
    config: {
      frontend: { sample_rate: 16000 },
      thresholds: {
        sensitivity,
        open_set_threshold: 0.6,
        z_prolong: 2.5,
        silence_block_ms: 250,
        w_canonical: 0.85,
        w_open: 0.15,
      },
      calibration: { temperature: 1 },
      inventory_name: "demo8",
    },
    verdicts: [],
    ...partial,
  };
}

export function body(report: Report): FetchedReport {
  return { report, text: JSON.stringify(report) };
}

type Call =
  | { op: "getReport"; id: string }
  | { op: "reanalyze"; id: string; draft: ThresholdsDraft }
  | { op: "verdict"; id: string; eventId: string; verdict: string; annotator: string }
  | { op: "svg"; id: string }
  | { op: "list" };

/**
 * Scripted stand-in for the HTTP client. Responses are queued per operation;
 * an exhausted queue falls back to the current report, so tests only script
 * the transitions they care about.
 */
export class FakeApi implements ConsoleApi {
  calls: Call[] = [];
  current: Report;
  svg = '<svg xmlns="http://www.w3.org/2000/svg"></svg>';
  summaries: ReportSummary[] = [];
  private reanalyzeQueue: Array<FetchedReport | ApiError> = [];
  private verdictQueue: Array<FetchedReport | ApiError> = [];
  private getQueue: Array<FetchedReport | ApiError> = [];

  constructor(report: Report = makeReport()) {
    this.current = report;
  }

  queueReanalyze(result: Report | ApiError): void {
    this.reanalyzeQueue.push(result instanceof ApiError ? result : body(result));
  }

  queueVerdict(result: Report | ApiError): void {
    this.verdictQueue.push(result instanceof ApiError ? result : body(result));
  }

  queueGet(result: Report | ApiError): void {
    this.getQueue.push(result instanceof ApiError ? result : body(result));
  }

  private take(queue: Array<FetchedReport | ApiError>): FetchedReport {
    const next = queue.shift();
    if (next === undefined) return body(this.current);
    if (next instanceof ApiError) throw next;
    this.current = next.report;
    return next;
  }

  async listReports(): Promise<ReportSummary[]> {
    this.calls.push({ op: "list" });
    return this.summaries;
  }

  async getReport(id: string): Promise<FetchedReport> {
    this.calls.push({ op: "getReport", id });
    return this.take(this.getQueue);
  }

  async reanalyze(id: string, draft: ThresholdsDraft): Promise<FetchedReport> {
    this.calls.push({ op: "reanalyze", id, draft });
    return this.take(this.reanalyzeQueue);
  }

  async recordVerdict(
    id: string,
    eventId: string,
    verdict: string,
    annotator: string,
  ): Promise<FetchedReport> {
    this.calls.push({ op: "verdict", id, eventId, verdict, annotator });
    const next = this.verdictQueue.shift();
    if (next instanceof ApiError) throw next;
    if (next !== undefined) {
      this.current = next.report;
      return next;
    }
    const record: VerdictRecord = {
      event_id: eventId,
      verdict,
      annotator,
      timestamp: "2026-01-01T00:00:00+00:00",
    };
    this.current = {
      ...this.current,
      version: this.current.version + 1,
      verdicts: [...this.current.verdicts, record],
    };
    return body(this.current);
  }

  async alignmentSvg(id: string): Promise<string> {
    this.calls.push({ op: "svg", id });
    return this.svg;
  }

  callsOf(op: Call["op"]): Call[] {
    return this.calls.filter((c) => c.op === op);
  }
}
