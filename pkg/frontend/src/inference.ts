// Inference screen: upload an image, get class probabilities as bars.
// Probabilities render exactly as the server returned them.

import type { ApiClient, Prediction } from "./api.js";
import { clear, el } from "./dom.js";
import type { Store } from "./store.js";
import { percent } from "./validate.js";

export class InferenceScreen {
  readonly root: HTMLElement;
  private fileInput: HTMLInputElement;
  private bars: HTMLElement;
  private status: HTMLElement;

  constructor(
    private api: ApiClient,
    private store: Store,
  ) {
    this.fileInput = el("input", { type: "file", accept: "image/png" }) as HTMLInputElement;
    this.fileInput.addEventListener("change", () => {
      const file = this.fileInput.files?.[0];
      if (file) void this.predictFile(file);
    });
    this.bars = el("div", { class: "probability-bars" });
    this.status = el("p", { class: "inference-status" });
    this.root = el("section", { class: "screen inference" }, [
      el("h2", {}, ["Classify an image"]),
      this.fileInput,
      this.bars,
      this.status,
    ]);
  }

  async predictFile(file: File | Blob): Promise<Prediction | null> {
    const buffer = await file.arrayBuffer();
    return this.predictBytes(new Uint8Array(buffer));
  }

  async predictBytes(bytes: Uint8Array): Promise<Prediction | null> {
    const modelId = this.store.get().selectedModel;
    if (!modelId) {
      this.status.textContent = "train or select a model first";
      return null;
    }
    let binary = "";
    for (const byte of bytes) binary += String.fromCharCode(byte);
    this.status.textContent = "predicting…";
    try {
      const prediction = await this.api.predictImage(modelId, btoa(binary));
      this.render(prediction);
      return prediction;
    } catch (err) {
      this.status.textContent = `prediction failed: ${(err as Error).message}`;
      return null;
    }
  }

  private render(prediction: Prediction): void {
    clear(this.bars);
    const entries = Object.entries(prediction.probabilities).sort((a, b) => b[1] - a[1]);
    for (const [label, probability] of entries) {
      const fill = el("div", { class: "bar-fill" });
      fill.style.width = `${probability * 100}%`;
      this.bars.append(
        el("div", { class: "bar-row", "data-label": label }, [
          el("span", { class: "bar-label" }, [label]),
          el("div", { class: "bar" }, [fill]),
          el("span", { class: "bar-value" }, [percent(probability)]),
        ]),
      );
    }
    this.status.textContent = `label: ${prediction.label}`;
  }
}
