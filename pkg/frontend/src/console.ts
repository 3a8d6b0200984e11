import { ApiError } from "./api.js";
import type { ConsoleApi, FetchedReport } from "./api.js";
import { ConsoleState, SENSITIVITY_CATEGORIES } from "./state.js";
import type { EventRecord, Report } from "./types.js";

/** Slider moves within this window collapse into one reanalyze request. */
export const REANALYZE_DEBOUNCE_MS = 300;

export interface ConsoleOptions {
  debounceMs?: number;
  annotator?: string;
  /** Receives the export payload; defaults to a browser file download. */
  download?: (filename: string, text: string) => void;
}

function debounce(ms: number, fn: () => void): () => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return () => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      fn();
    }, ms);
  };
}

function browserDownload(filename: string, text: string): void {
  if (typeof URL.createObjectURL !== "function") return;
  const url = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

interface Elements {
  banner: HTMLDivElement;
  header: HTMLDivElement;
  status: HTMLDivElement;
  controls: HTMLDivElement;
  timeline: HTMLDivElement;
  events: HTMLUListElement;
  exportButton: HTMLButtonElement;
}

/**
 * Single-report review view: server-rendered alignment map, event list with
 * accept/reject verdicts, and live sensitivity sliders.
 *
 * Every number on screen comes out of a server response; the console's own
 * work is limited to clamping slider input and formatting.
 */
export class ReviewConsole {
  readonly state = new ConsoleState();
  private readonly els: Elements;
  private readonly annotator: string;
  private readonly download: (filename: string, text: string) => void;
  private readonly scheduleReanalyze: () => void;
  private lastBody: FetchedReport | null = null;
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: ConsoleApi,
    private readonly root: HTMLElement,
    options: ConsoleOptions = {},
  ) {
    this.annotator = options.annotator ?? "console";
    this.download = options.download ?? browserDownload;
    this.scheduleReanalyze = debounce(
      options.debounceMs ?? REANALYZE_DEBOUNCE_MS,
      () => this.pushThresholds(),
    );
    this.els = this.buildSkeleton();
  }

  /** Resolves once queued reanalyze requests have settled. */
  async idle(): Promise<void> {
    await this.chain;
  }

  exportText(): string {
    if (this.lastBody === null) throw new Error("no report loaded");
    return this.lastBody.text;
  }

  async loadReport(id: string): Promise<void> {
    this.clearBanner();
    let body: FetchedReport;
    try {
      body = await this.api.getReport(id);
    } catch (err) {
      this.showLoadError(err, id);
      return;
    }
    this.state.seedDraft(body.report.config.thresholds);
    this.syncSliders();
    this.applyBody(body);
    await this.refreshTimeline();
  }

  async recordVerdict(eventId: string, verdict: "accepted" | "rejected"): Promise<void> {
    const id = this.state.reportId;
    if (id === null || !this.state.isDisplayed(eventId)) return;
    this.state.beginVerdict(eventId);
    this.renderRowBusy(eventId, true);
    try {
      const body = await this.api.recordVerdict(id, eventId, verdict, this.annotator);
      this.applyBody(body);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.loadReport(id);
      } else if (err instanceof ApiError && err.status === 404) {
        this.renderRowError(eventId, "event no longer exists on the server");
      } else {
        this.showBanner("offline", describeFailure(err), () => this.loadReport(id));
      }
    } finally {
      this.state.endVerdict(eventId);
      this.renderRowBusy(eventId, false);
    }
  }

  private pushThresholds(): void {
    const id = this.state.reportId;
    if (id === null) return;
    const draft = {
      sensitivity: { ...this.state.draft.sensitivity },
      open_set_threshold: this.state.draft.open_set_threshold,
    };
    this.chain = this.chain.then(async () => {
      try {
        const body = await this.api.reanalyze(id, draft);
        this.applyBody(body);
        await this.refreshTimeline();
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          await this.loadReport(id);
        } else {
          this.showBanner("error", describeFailure(err));
        }
      }
    });
  }

  private applyBody(body: FetchedReport): void {
    const previous =
      this.lastBody !== null && this.lastBody.report.report_id === body.report.report_id
        ? this.lastBody.report.events.length
        : null;
    this.lastBody = body;
    this.state.adoptReport(body.report);
    this.renderHeader(body.report);
    this.renderEvents(body.report);
    const count = body.report.events.length;
    this.els.status.textContent =
      previous === null
        ? `${count} event${count === 1 ? "" : "s"} (server v${body.report.version})`
        : `events: ${previous} -> ${count} (server v${body.report.version})`;
  }

  private async refreshTimeline(): Promise<void> {
    const id = this.state.reportId;
    if (id === null) return;
    try {
      this.els.timeline.innerHTML = await this.api.alignmentSvg(id);
    } catch {
      this.els.timeline.textContent = "alignment map unavailable";
    }
  }

  // -- rendering ----------------------------------------------------------

  private buildSkeleton(): Elements {
    this.root.textContent = "";
    this.root.classList.add("review-console");

    const banner = document.createElement("div");
    banner.className = "banner";
    banner.hidden = true;

    const header = document.createElement("div");
    header.className = "report-header";

    const status = document.createElement("div");
    status.className = "status";

    const controls = document.createElement("div");
    controls.className = "controls";

    const timeline = document.createElement("div");
    timeline.className = "timeline";

    const events = document.createElement("ul");
    events.className = "events";

    const exportButton = document.createElement("button");
    exportButton.className = "export";
    exportButton.textContent = "Export JSON";
    exportButton.addEventListener("click", () => {
      if (this.lastBody === null) return;
      const { report_id, version } = this.lastBody.report;
      this.download(`${report_id}_v${version}.json`, this.exportText());
    });

    for (const el of [banner, header, status, controls, timeline, events, exportButton]) {
      this.root.appendChild(el);
    }

    for (const category of SENSITIVITY_CATEGORIES) {
      controls.appendChild(
        this.sliderRow(category, this.state.draft.sensitivity[category] ?? 0.5, (v) =>
          this.state.setSensitivity(category, v),
        ),
      );
    }
    controls.appendChild(
      this.sliderRow("open set", this.state.draft.open_set_threshold, (v) =>
        this.state.setOpenSetThreshold(v),
      ),
    );

    return { banner, header, status, controls, timeline, events, exportButton };
  }

  private sliderRow(
    label: string,
    initial: number,
    store: (value: number) => number,
  ): HTMLLabelElement {
    const row = document.createElement("label");
    row.className = "slider-row";

    const name = document.createElement("span");
    name.className = "slider-name";
    name.textContent = label;

    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.01";
    input.value = String(initial);
    input.dataset.control = label.replace(" ", "_");

    const value = document.createElement("span");
    value.className = "slider-value";
    value.textContent = initial.toFixed(2);

    input.addEventListener("input", () => {
      const stored = store(Number(input.value));
      input.value = String(stored);
      value.textContent = stored.toFixed(2);
      this.scheduleReanalyze();
    });

    row.appendChild(name);
    row.appendChild(input);
    row.appendChild(value);
    return row;
  }

  private syncSliders(): void {
    const rows = this.els.controls.querySelectorAll<HTMLInputElement>("input[data-control]");
    rows.forEach((input) => {
      const key = input.dataset.control ?? "";
      const v =
        key === "open_set"
          ? this.state.draft.open_set_threshold
          : this.state.draft.sensitivity[key];
      if (v === undefined) return;
      input.value = String(v);
      const label = input.parentElement?.querySelector(".slider-value");
      if (label) label.textContent = v.toFixed(2);
    });
  }

  private renderHeader(report: Report): void {
    this.els.header.textContent =
      `${report.report_id} v${report.version} | ${report.audio.path} ` +
      `(${report.audio.duration_s.toFixed(2)} s, ${report.audio.sample_rate} Hz)`;
  }

  private renderEvents(report: Report): void {
    const latest = new Map<string, string>();
    for (const v of report.verdicts) latest.set(v.event_id, v.verdict); // append-only: last wins

    this.els.events.textContent = "";
    const ordered = [...report.events].sort((a, b) => a.start_s - b.start_s);
    for (const event of ordered) {
      this.els.events.appendChild(this.eventRow(event, latest.get(event.event_id)));
    }
  }

  private eventRow(event: EventRecord, verdict: string | undefined): HTMLLIElement {
    const row = document.createElement("li");
    row.className = "event-row";
    row.dataset.eventId = event.event_id;

    const cell = (cls: string, text: string) => {
      const span = document.createElement("span");
      span.className = cls;
      span.textContent = text;
      row.appendChild(span);
      return span;
    };

    cell("category", event.category);
    cell("span", `${event.start_s.toFixed(2)}-${event.end_s.toFixed(2)} s`);
    cell("confidence", event.calibrated_confidence.toFixed(2));
    cell("severity", event.severity);

    const badge = cell("badge", verdict ?? "");
    badge.hidden = verdict === undefined;
    if (verdict !== undefined) badge.classList.add(`badge-${verdict}`);

    for (const label of ["accepted", "rejected"] as const) {
      const button = document.createElement("button");
      button.className = label === "accepted" ? "accept" : "reject";
      button.textContent = label === "accepted" ? "accept" : "reject";
      button.disabled = this.state.pendingVerdicts.has(event.event_id);
      button.addEventListener("click", () => void this.recordVerdict(event.event_id, label));
      row.appendChild(button);
    }

    const error = document.createElement("span");
    error.className = "row-error";
    row.appendChild(error);
    return row;
  }

  private eventRowEl(eventId: string): HTMLLIElement | null {
    for (const row of this.els.events.querySelectorAll<HTMLLIElement>("li.event-row")) {
      if (row.dataset.eventId === eventId) return row;
    }
    return null;
  }

  private renderRowBusy(eventId: string, busy: boolean): void {
    const row = this.eventRowEl(eventId);
    if (row === null) return;
    row.querySelectorAll("button").forEach((b) => (b.disabled = busy));
  }

  private renderRowError(eventId: string, message: string): void {
    const row = this.eventRowEl(eventId);
    const slot = row?.querySelector(".row-error");
    if (slot) slot.textContent = message;
  }

  // -- error surfaces ------------------------------------------------------

  private showLoadError(err: unknown, id: string): void {
    if (err instanceof ApiError && err.status === 404) {
      this.showBanner("not-found", `report ${id} not found`);
    } else if (err instanceof ApiError) {
      this.showBanner("error", describeFailure(err));
    } else {
      this.showBanner("offline", "service unreachable", () => this.loadReport(id));
    }
  }

  private showBanner(kind: string, message: string, retry?: () => Promise<void>): void {
    const banner = this.els.banner;
    banner.hidden = false;
    banner.className = `banner ${kind}`;
    banner.textContent = message;
    if (retry) {
      const button = document.createElement("button");
      button.className = "retry";
      button.textContent = "retry";
      button.addEventListener("click", () => void retry());
      banner.appendChild(button);
    }
  }

  private clearBanner(): void {
    this.els.banner.hidden = true;
    this.els.banner.textContent = "";
  }
}

function describeFailure(err: unknown): string {
  if (err instanceof ApiError) return `server rejected the request: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
