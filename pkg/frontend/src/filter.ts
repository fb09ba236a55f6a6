// Filter tuning: sliders for retention target and beta. Every change is
// debounced 300 ms and then calls the read-only preview endpoint; nothing is
// persisted until the user explicitly applies. The what-if loop (move slider,
// watch survivor counts, decide) is the whole point of this screen.

import type { ApiClient, FilterReport } from "./api.js";
import { clear, debounce, el } from "./dom.js";
import type { Store } from "./store.js";
import { percent } from "./validate.js";

export const PREVIEW_DEBOUNCE_MS = 300;

export class FilterTuning {
  readonly root: HTMLElement;
  readonly retentionSlider: HTMLInputElement;
  readonly betaSlider: HTMLInputElement;
  private summary: HTMLElement;
  private breakdown: HTMLElement;
  private status: HTMLElement;
  private schedulePreview: () => void;
  lastReport: FilterReport | null = null;

  constructor(
    private api: ApiClient,
    private store: Store,
  ) {
    this.retentionSlider = el("input", {
      type: "range",
      min: "0.5",
      max: "1",
      step: "0.005",
      value: String(store.get().draftFilter.retention_target),
      class: "retention-slider",
    }) as HTMLInputElement;
    this.betaSlider = el("input", {
      type: "range",
      min: "0.9",
      max: "1",
      step: "0.0005",
      value: String(store.get().draftFilter.beta),
      class: "beta-slider",
    }) as HTMLInputElement;
    this.summary = el("div", { class: "filter-summary" });
    this.breakdown = el("table", { class: "filter-breakdown" });
    this.status = el("p", { class: "filter-status" });
    const apply = el("button", { class: "apply-filter" }, ["Apply to dataset"]);
    apply.addEventListener("click", () => void this.apply());

    this.schedulePreview = debounce(() => void this.preview(), PREVIEW_DEBOUNCE_MS);
    for (const slider of [this.retentionSlider, this.betaSlider]) {
      slider.addEventListener("input", () => {
        this.syncDraft();
        this.schedulePreview();
      });
    }

    this.root = el("section", { class: "screen filter-tuning" }, [
      el("h2", {}, ["Duplicate & outlier filter"]),
      el("label", {}, ["Retention target ", this.retentionSlider]),
      el("label", {}, ["Duplicate threshold (beta) ", this.betaSlider]),
      this.summary,
      this.breakdown,
      this.status,
      apply,
    ]);
  }

  private syncDraft(): void {
    this.store.update({
      draftFilter: {
        ...this.store.get().draftFilter,
        retention_target: Number(this.retentionSlider.value),
        beta: Number(this.betaSlider.value),
      },
    });
  }

  /** Simulate a slider move (used by tests and keyboard input paths). */
  setRetention(value: number): void {
    this.retentionSlider.value = String(value);
    this.retentionSlider.dispatchEvent(new Event("input"));
  }

  setBeta(value: number): void {
    this.betaSlider.value = String(value);
    this.betaSlider.dispatchEvent(new Event("input"));
  }

  async preview(): Promise<FilterReport | null> {
    const datasetId = this.store.get().selectedDataset;
    if (!datasetId) {
      this.status.textContent = "select a dataset first";
      return null;
    }
    this.status.textContent = "previewing…";
    try {
      const report = await this.api.previewFilter(datasetId, this.store.get().draftFilter);
      this.renderReport(report, "preview");
      return report;
    } catch (err) {
      this.status.textContent = `preview failed: ${(err as Error).message}`;
      return null;
    }
  }

  async apply(): Promise<FilterReport | null> {
    const datasetId = this.store.get().selectedDataset;
    if (!datasetId) {
      this.status.textContent = "select a dataset first";
      return null;
    }
    try {
      const report = await this.api.applyFilter(datasetId, this.store.get().draftFilter);
      this.renderReport(report, "applied");
      return report;
    } catch (err) {
      this.status.textContent = `apply failed: ${(err as Error).message}`;
      return null;
    }
  }

  private renderReport(report: FilterReport, verb: string): void {
    this.lastReport = report;
    const kept = Object.values(report.per_class_breakdown).reduce((n, c) => n + c.kept, 0);
    clear(this.summary);
    this.summary.append(
      el("span", { class: "survivors" }, [`${kept} survivors`]),
      el("span", { class: "dup-count" }, [`${report.removed_duplicates.length} duplicates removed`]),
      el("span", { class: "outlier-count" }, [`${report.removed_outliers.length} outliers removed`]),
      el("span", { class: "retention" }, [`retention ${percent(report.retention_achieved)}`]),
    );
    clear(this.breakdown);
    this.breakdown.append(
      el("tr", {}, [
        el("th", {}, ["class"]),
        el("th", {}, ["kept"]),
        el("th", {}, ["duplicates"]),
        el("th", {}, ["outliers"]),
        el("th", {}, ["alpha"]),
      ]),
    );
    for (const [label, entry] of Object.entries(report.per_class_breakdown)) {
      this.breakdown.append(
        el("tr", { class: "class-row", "data-class": label }, [
          el("td", {}, [label]),
          el("td", { class: "kept" }, [String(entry.kept)]),
          el("td", {}, [String(entry.removed_duplicates)]),
          el("td", {}, [String(entry.removed_outliers)]),
          el("td", {}, [entry.alpha === null ? "—" : entry.alpha.toFixed(4)]),
        ]),
      );
    }
    this.status.textContent = `${verb}: alpha ${report.alpha_used.toFixed(4)}`;
  }
}
