// Single UI store. All state mutations funnel through update(), which runs
// listeners synchronously in subscription order, so screens never observe
// partially-applied changes.

import type { FilterSettings, GrammarSpec, PipelineSettings } from "./api.js";

export interface SessionState {
  selectedDataset: string | null;
  selectedModel: string | null;
  draftGrammar: GrammarSpec;
  draftConfig: PipelineSettings;
  draftFilter: FilterSettings;
  activeJobs: string[];
}

export const DEFAULT_FILTER: FilterSettings = {
  beta: 0.9825,
  retention_target: 0.9,
  alpha: null,
  per_class: true,
};

export const DEFAULT_CONFIG: PipelineSettings = {
  images_per_prompt: 8,
  image_size: 512,
  use_rewriter: true,
  use_style_transfer: false,
  style_domain: "warm",
  use_filter: true,
  filter: DEFAULT_FILTER,
  seed: 0,
  parallelism: 4,
};

export function defaultGrammar(): GrammarSpec {
  return {
    contexts: [
      { name: "category", options: [], mandatory: true },
    ],
  };
}

export class Store {
  private state: SessionState;
  private listeners: Array<(state: SessionState) => void> = [];

  constructor(initial?: Partial<SessionState>) {
    this.state = {
      selectedDataset: null,
      selectedModel: null,
      draftGrammar: defaultGrammar(),
      draftConfig: { ...DEFAULT_CONFIG, filter: { ...DEFAULT_FILTER } },
      draftFilter: { ...DEFAULT_FILTER },
      activeJobs: [],
      ...initial,
    };
  }

  get(): SessionState {
    return this.state;
  }

  update(changes: Partial<SessionState>): void {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: (state: SessionState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
