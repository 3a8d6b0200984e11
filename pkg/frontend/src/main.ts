import { ReviewApi } from "./api.js";
import type { ConsoleApi } from "./api.js";
import { ReviewConsole } from "./console.js";
import type { ReportSummary } from "./types.js";

export interface BootedConsole {
  console: ReviewConsole;
  refreshList: () => Promise<void>;
}

/**
 * Mounts the report picker and the review console side by side. `api`
 * defaults to same-origin; tests hand in a client pointed elsewhere.
 */
export async function boot(root: HTMLElement, api: ConsoleApi = new ReviewApi()): Promise<BootedConsole> {
  root.textContent = "";

  const picker = document.createElement("div");
  picker.className = "report-picker";
  const consoleRoot = document.createElement("div");
  root.appendChild(picker);
  root.appendChild(consoleRoot);

  const view = new ReviewConsole(api, consoleRoot);

  const refreshList = async () => {
    picker.textContent = "";
    let reports: ReportSummary[];
    try {
      reports = await api.listReports();
    } catch {
      const banner = document.createElement("div");
      banner.className = "banner offline";
      banner.textContent = "service unreachable";
      const retry = document.createElement("button");
      retry.className = "retry";
      retry.textContent = "retry";
      retry.addEventListener("click", () => void refreshList());
      banner.appendChild(retry);
      picker.appendChild(banner);
      return;
    }
    if (reports.length === 0) {
      const empty = document.createElement("div");
      empty.className = "empty-state";
      empty.textContent = "no reports yet - analyze a recording first";
      picker.appendChild(empty);
      return;
    }
    const list = document.createElement("ul");
    list.className = "report-list";
    for (const summary of reports) {
      const item = document.createElement("li");
      const open = document.createElement("button");
      open.dataset.reportId = summary.report_id;
      open.textContent =
        `${summary.report_id} v${summary.version} | ${summary.audio.path} | ` +
        `${summary.event_count} event${summary.event_count === 1 ? "" : "s"}`;
      open.addEventListener("click", () => void view.loadReport(summary.report_id));
      item.appendChild(open);
      list.appendChild(item);
    }
    picker.appendChild(list);
  };

  await refreshList();
  return { console: view, refreshList };
}
