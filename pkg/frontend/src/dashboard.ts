// Training dashboard: follows one job's event stream, draws live loss and
// accuracy curves (one point per epoch, one curve per fold when
// cross-validating), then shows the final metrics with a confusion grid.
// When streaming is unavailable it degrades to 2-second status polling.

import type { ApiClient, JobEvent, ModelMetrics } from "./api.js";
import { isTerminal } from "./api.js";
import { clear, el } from "./dom.js";
import { percent } from "./validate.js";

export const POLL_FALLBACK_MS = 2000;

interface CurvePoint {
  epoch: number;
  trainLoss: number | null;
  trainAccuracy: number | null;
  valAccuracy: number | null;
}

export class TrainingDashboard {
  readonly root: HTMLElement;
  private statusLine: HTMLElement;
  private curves: HTMLElement;
  private metricsBox: HTMLElement;
  private subscription: AbortController | null = null;
  /** fold index (-1 for single training) -> points per epoch */
  readonly curvePoints = new Map<number, CurvePoint[]>();

  constructor(private api: ApiClient) {
    this.statusLine = el("p", { class: "job-status" });
    this.curves = el("div", { class: "curves" });
    this.metricsBox = el("div", { class: "metrics" });
    this.root = el("section", { class: "screen dashboard" }, [
      el("h2", {}, ["Training"]),
      this.statusLine,
      this.curves,
      this.metricsBox,
    ]);
  }

  /** Follow a job; at most one subscription is active at a time. */
  async follow(jobId: string, modelId?: string): Promise<void> {
    this.subscription?.abort();
    const controller = new AbortController();
    this.subscription = controller;
    this.curvePoints.clear();
    clear(this.curves);
    clear(this.metricsBox);
    this.statusLine.textContent = `following job ${jobId}`;
    let sawTerminal = false;
    try {
      await this.api.streamJobEvents(
        jobId,
        (event) => {
          sawTerminal = this.handleEvent(event) || sawTerminal;
        },
        controller.signal,
      );
    } catch {
      await this.pollUntilDone(jobId, controller);
      sawTerminal = true;
    }
    if (!sawTerminal) await this.pollUntilDone(jobId, controller);
    if (modelId && this.statusLine.dataset.status === "succeeded") {
      await this.showMetrics(modelId);
    }
  }

  /** Returns true when the event is terminal. */
  handleEvent(event: JobEvent): boolean {
    if (event.heartbeat) return false;
    const stage = event.stage ?? "";
    if (stage === "train" && event.data && typeof event.data.epoch === "number") {
      this.recordCurvePoint(event.data);
    }
    if (isTerminal(stage)) {
      this.statusLine.dataset.status = stage;
      this.statusLine.textContent =
        stage === "failed" ? `job failed: ${event.message ?? "unknown error"}` : `job ${stage}`;
      return true;
    }
    this.statusLine.dataset.status = "running";
    this.statusLine.textContent = `${stage}: ${percent(event.progress ?? 0)} ${event.message ?? ""}`;
    return false;
  }

  private recordCurvePoint(data: NonNullable<JobEvent["data"]>): void {
    const fold = typeof data.fold === "number" ? data.fold : -1;
    const points = this.curvePoints.get(fold) ?? [];
    points.push({
      epoch: data.epoch as number,
      trainLoss: (data.train_loss as number | undefined) ?? null,
      trainAccuracy: (data.train_accuracy as number | undefined) ?? null,
      valAccuracy: (data.val_accuracy as number | null | undefined) ?? null,
    });
    this.curvePoints.set(fold, points);
    this.renderCurves();
  }

  private renderCurves(): void {
    clear(this.curves);
    for (const [fold, points] of [...this.curvePoints.entries()].sort((a, b) => a[0] - b[0])) {
      const label = fold < 0 ? "training" : `fold ${fold}`;
      const latest = points[points.length - 1];
      const row = el("div", { class: "curve", "data-fold": String(fold) }, [
        el("span", { class: "curve-label" }, [label]),
        el("span", { class: "curve-points" }, [
          points
            .map((p) => `${p.trainLoss === null ? "" : p.trainLoss.toFixed(3)}`)
            .join(" "),
        ]),
        el("span", { class: "curve-latest" }, [
          latest.valAccuracy === null
            ? `epoch ${latest.epoch}`
            : `epoch ${latest.epoch}, val ${percent(latest.valAccuracy)}`,
        ]),
      ]);
      this.curves.append(row);
    }
  }

  private async pollUntilDone(jobId: string, controller: AbortController): Promise<void> {
    for (;;) {
      if (controller.signal.aborted) return;
      const state = await this.api.jobState(jobId);
      this.statusLine.dataset.status = state.status;
      if (isTerminal(state.status)) {
        this.statusLine.textContent =
          state.status === "failed" ? `job failed: ${state.error ?? ""}` : `job ${state.status}`;
        return;
      }
      this.statusLine.textContent = `${state.stage}: ${percent(state.progress)}`;
      await new Promise((resolve) => setTimeout(resolve, POLL_FALLBACK_MS));
    }
  }

  async showMetrics(modelId: string): Promise<ModelMetrics> {
    const metrics = await this.api.modelMetrics(modelId);
    clear(this.metricsBox);
    const report = metrics.report;
    this.metricsBox.append(
      el("table", { class: "metric-row" }, [
        el("tr", {}, [
          el("th", {}, ["Accuracy"]),
          el("th", {}, ["Precision"]),
          el("th", {}, ["Recall"]),
          el("th", {}, ["F1"]),
        ]),
        el("tr", {}, [
          el("td", { class: "m-accuracy" }, [percent(report.accuracy)]),
          el("td", { class: "m-precision" }, [percent(report.weighted_precision)]),
          el("td", { class: "m-recall" }, [percent(report.weighted_recall)]),
          el("td", { class: "m-f1" }, [percent(report.weighted_f1)]),
        ]),
      ]),
    );
    const confusion = el("table", { class: "confusion" });
    const total = report.confusion.flat().reduce((a, b) => a + b, 0) || 1;
    for (const row of report.confusion) {
      const cells = row.map((count) => {
        const cell = el("td", { class: "confusion-cell" }, [String(count)]);
        cell.style.opacity = String(0.25 + 0.75 * (count / total));
        return cell;
      });
      confusion.append(el("tr", {}, cells));
    }
    this.metricsBox.append(confusion);
    if (metrics.folds) {
      const foldTable = el("table", { class: "fold-metrics" });
      metrics.folds.forEach((fold, index) => {
        foldTable.append(
          el("tr", { class: "fold-row" }, [
            el("td", {}, [`fold ${index + 1}`]),
            el("td", {}, [percent(fold.accuracy)]),
          ]),
        );
      });
      this.metricsBox.append(foldTable);
    }
    return metrics;
  }
}
