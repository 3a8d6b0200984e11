import type { Report, ReportSummary, ThresholdsDraft } from "./types.js";

/** Non-2xx response; status distinguishes not-found (404) from stale (409). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/**
 * A report plus the exact bytes the server sent. Export hands back `text`
 * untouched so the download is byte-identical to the server body.
 */
export interface FetchedReport {
  report: Report;
  text: string;
}

/** The slice of the HTTP API the console consumes. */
export interface ConsoleApi {
  listReports(): Promise<ReportSummary[]>;
  getReport(id: string): Promise<FetchedReport>;
  reanalyze(id: string, draft: ThresholdsDraft): Promise<FetchedReport>;
  recordVerdict(
    id: string,
    eventId: string,
    verdict: string,
    annotator: string,
  ): Promise<FetchedReport>;
  alignmentSvg(id: string): Promise<string>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let message = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.message === "string") message = body.message;
  } catch {
    // non-JSON error body; the status code is all we have
  }
  throw new ApiError(resp.status, message);
}

export class ReviewApi implements ConsoleApi {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly base: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async reportBody(resp: Response): Promise<FetchedReport> {
    await raiseForStatus(resp);
    const text = await resp.text();
    return { report: JSON.parse(text) as Report, text };
  }

  async listReports(): Promise<ReportSummary[]> {
    const resp = await this.fetchFn(`${this.base}/reports`);
    await raiseForStatus(resp);
    return (await resp.json()) as ReportSummary[];
  }

  async getReport(id: string): Promise<FetchedReport> {
    return this.reportBody(await this.fetchFn(`${this.base}/reports/${id}`));
  }

  async reanalyze(id: string, draft: ThresholdsDraft): Promise<FetchedReport> {
    const resp = await this.fetchFn(`${this.base}/reports/${id}/reanalyze`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(draft),
    });
    return this.reportBody(resp);
  }

  async recordVerdict(
    id: string,
    eventId: string,
    verdict: string,
    annotator: string,
  ): Promise<FetchedReport> {
    const resp = await this.fetchFn(`${this.base}/reports/${id}/verdicts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ event_id: eventId, verdict, annotator }),
    });
    return this.reportBody(resp);
  }

  async alignmentSvg(id: string): Promise<string> {
    const resp = await this.fetchFn(`${this.base}/reports/${id}/alignment.svg`);
    await raiseForStatus(resp);
    return resp.text();
  }

  /** Upload audio plus its expected transcript; resolves to the report id. */
  async analyze(audio: Blob, filename: string, transcript: string): Promise<string> {
    const form = new FormData();
    form.append("audio", audio, filename);
    form.append("transcript", transcript);
    const resp = await this.fetchFn(`${this.base}/analyze`, {
      method: "POST",
      body: form,
    });
    await raiseForStatus(resp);
    const body = (await resp.json()) as { report_id: string };
    return body.report_id;
  }
}
