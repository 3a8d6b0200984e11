/**
 * Shapes of the report-service payloads. The console renders these verbatim;
 * it never derives a score or confidence on its own.
 */

export interface AudioInfo {
  path: string;
  duration_s: number;
  sample_rate: number;
}

export interface TranscriptInfo {
  phones: string[];
  word_boundaries: number[];
  source_text: string;
}

export interface AlignmentSegment {
  symbol: string;
  start_s: number;
  end_s: number;
  mean_posterior: number;
}

export interface EditOp {
  kind: string;
  realized_symbol: string | null;
  expected_symbol: string | null;
  realized_index: number | null;
  expected_index: number | null;
  frame_span: [number, number];
  start_s: number;
  end_s: number;
  mean_posterior: number;
  duration_z: number | null;
}

export interface EventRecord {
  event_id: string;
  category: string;
  start_frame: number;
  end_frame: number;
  start_s: number;
  end_s: number;
  raw_score: number;
  calibrated_confidence: number;
  severity: string;
  contributing_edit_ops: number[];
  attribution: Record<string, number> | null;
}

export interface VerdictRecord {
  event_id: string;
  verdict: string;
  annotator: string;
  timestamp: string;
}

export interface Thresholds {
  sensitivity: Record<string, number>;
  open_set_threshold: number;
  z_prolong: number;
  silence_block_ms: number;
  w_canonical: number;
  w_open: number;
}

export interface ReportConfig {
  frontend: Record<string, number>;
  thresholds: Thresholds;
  calibration: { temperature: number };
  inventory_name: string;
}

export interface Report {
  report_id: string;
  version: number;
  audio: AudioInfo;
  transcript: TranscriptInfo;
  frame_rate: number;
  alignment: AlignmentSegment[];
  edit_ops: EditOp[];
  candidates: unknown[];
  events: EventRecord[];
  atypicality: number;
  config: ReportConfig;
  verdicts: VerdictRecord[];
}

export interface ReportSummary {
  report_id: string;
  version: number;
  audio: AudioInfo;
  event_count: number;
}

/** What the console may send back when steering thresholds. */
export interface ThresholdsDraft {
  sensitivity: Record<string, number>;
  open_set_threshold: number;
}
