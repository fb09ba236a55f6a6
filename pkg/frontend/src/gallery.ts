// Prompt & gallery review: prompt table with source badges, image grid
// grouped by class with verdict badges, and a before/after toggle that hides
// filtered-out images to show the dataset as training will see it.

import type { ApiClient, DatasetRecords } from "./api.js";
import { clear, el } from "./dom.js";
import type { Store } from "./store.js";

export class GalleryReview {
  readonly root: HTMLElement;
  private promptTable: HTMLElement;
  private grid: HTMLElement;
  private toggle: HTMLInputElement;
  private status: HTMLElement;
  private records: DatasetRecords | null = null;

  constructor(
    private api: ApiClient,
    private store: Store,
  ) {
    this.promptTable = el("table", { class: "prompt-table" });
    this.grid = el("div", { class: "image-grid" });
    this.toggle = el("input", { type: "checkbox", class: "after-toggle" }) as HTMLInputElement;
    this.toggle.addEventListener("change", () => this.renderGrid());
    this.status = el("p", { class: "gallery-status" });
    const refresh = el("button", { class: "refresh-gallery" }, ["Refresh"]);
    refresh.addEventListener("click", () => void this.load());
    this.root = el("section", { class: "screen gallery" }, [
      el("h2", {}, ["Prompts & images"]),
      refresh,
      this.promptTable,
      el("label", {}, [this.toggle, " show only kept images (after filter)"]),
      this.grid,
      this.status,
    ]);
  }

  async load(): Promise<DatasetRecords | null> {
    const datasetId = this.store.get().selectedDataset;
    if (!datasetId) {
      this.status.textContent = "select a dataset first";
      return null;
    }
    try {
      this.records = await this.api.datasetRecords(datasetId);
    } catch (err) {
      this.status.textContent = `load failed: ${(err as Error).message}`;
      return null;
    }
    this.renderPrompts();
    this.renderGrid();
    this.status.textContent = `${this.records.images.length} images, ${this.records.prompts.length} prompts`;
    return this.records;
  }

  private renderPrompts(): void {
    clear(this.promptTable);
    if (!this.records) return;
    this.promptTable.append(
      el("tr", {}, [el("th", {}, ["prompt"]), el("th", {}, ["source"]), el("th", {}, ["class"])]),
    );
    for (const prompt of this.records.prompts) {
      this.promptTable.append(
        el("tr", { class: "prompt-row", "data-prompt": prompt.id }, [
          el("td", { class: "prompt-text" }, [prompt.text]),
          el("td", {}, [el("span", { class: `badge source-${prompt.source}` }, [prompt.source])]),
          el("td", {}, [prompt.class_label]),
        ]),
      );
    }
  }

  private renderGrid(): void {
    clear(this.grid);
    if (!this.records) return;
    const keptOnly = this.toggle.checked;
    const byClass = new Map<string, typeof this.records.images>();
    for (const image of this.records.images) {
      if (keptOnly && image.filter_verdict !== "kept") continue;
      const bucket = byClass.get(image.class_label) ?? [];
      bucket.push(image);
      byClass.set(image.class_label, bucket);
    }
    for (const [label, images] of [...byClass.entries()].sort()) {
      const cells = images.map((image) =>
        el("figure", { class: "cell", "data-image": image.id }, [
          el("img", { src: image.url, alt: image.id, loading: "lazy" }),
          el("figcaption", {}, [
            el("span", { class: `badge verdict-${image.filter_verdict}` }, [
              image.filter_verdict,
            ]),
          ]),
        ]),
      );
      this.grid.append(
        el("div", { class: "class-group", "data-class": label }, [
          el("h3", {}, [`${label} (${images.length})`]),
          el("div", { class: "cells" }, cells),
        ]),
      );
    }
  }
}
