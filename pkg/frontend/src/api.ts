// Typed client for the v1 API. Every network call in the console goes
// through this module; the contract test enumerates these call sites.

export interface ContextSpec {
  name: string;
  options: string[];
  mandatory: boolean;
}

export interface GrammarSpec {
  contexts: ContextSpec[];
}

export interface FilterSettings {
  beta: number;
  retention_target: number;
  alpha: number | null;
  per_class: boolean;
}

export interface PipelineSettings {
  images_per_prompt: number;
  image_size: number;
  use_rewriter: boolean;
  use_style_transfer: boolean;
  style_domain: string;
  use_filter: boolean;
  filter: FilterSettings;
  seed: number;
  parallelism: number;
}

export interface ClassCounts {
  kept: number;
  removed_duplicate: number;
  removed_outlier: number;
  pending: number;
}

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  classes: string[];
  created_at: string;
  image_count: number;
  prompt_count: number;
  counts: Record<string, ClassCounts>;
}

export interface FilterReport {
  alpha_used: number;
  removed_duplicates: string[];
  removed_outliers: string[];
  retention_achieved: number;
  per_class_breakdown: Record<
    string,
    { kept: number; removed_duplicates: number; removed_outliers: number; alpha: number | null }
  >;
  warnings: string[];
}

export interface PromptRow {
  id: string;
  text: string;
  source: string;
  class_label: string;
}

export interface ImageRow {
  id: string;
  class_label: string;
  filter_verdict: string;
  prompt_id: string;
  seed: number;
  url: string;
}

export interface DatasetRecords {
  dataset_id: string;
  prompts: PromptRow[];
  images: ImageRow[];
}

export interface JobRef {
  job_id: string;
  dataset_id?: string;
  model_id?: string;
}

export interface JobState {
  job_id: string;
  kind: string;
  status: string;
  stage: string;
  progress: number;
  error: string | null;
  result: Record<string, unknown>;
}

export interface JobEvent {
  job_id?: string;
  stage?: string;
  progress?: number;
  message?: string;
  ts?: string;
  heartbeat?: boolean;
  data?: Record<string, unknown>;
}

export interface MetricsReport {
  accuracy: number;
  weighted_precision: number;
  weighted_recall: number;
  weighted_f1: number;
  confusion: number[][];
}

export interface ModelMetrics {
  report: MetricsReport;
  folds?: MetricsReport[];
  mean?: Record<string, number>;
}

export interface Prediction {
  label: string;
  probabilities: Record<string, number>;
}

export interface TrainSettings {
  learning_rate?: number;
  batch_size?: number;
  epochs?: number;
  optimizer?: "sgd" | "adamw";
  seed?: number;
  train_fraction?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail?: unknown,
  ) {
    super(message);
  }
}

// The documented v1 surface; the contract test matches every request here.
export const V1_ENDPOINTS = [
  "POST /v1/datasets",
  "POST /v1/datasets/{id}/augment",
  "GET /v1/datasets/{id}",
  "GET /v1/datasets/{id}/records",
  "GET /v1/datasets/{id}/images/{image_id}",
  "POST /v1/datasets/{id}/filter/preview",
  "POST /v1/datasets/{id}/filter",
  "POST /v1/models",
  "GET /v1/models/{id}/metrics",
  "POST /v1/models/{id}/predict",
  "GET /v1/jobs/{id}",
  "POST /v1/jobs/{id}/cancel",
  "GET /v1/jobs/{id}/events",
] as const;

async function parseError(response: Response): Promise<never> {
  let code = "internal";
  let message = `HTTP ${response.status}`;
  let detail: unknown;
  try {
    const body = await response.json();
    code = body.code ?? code;
    message = body.message ?? message;
    detail = body.detail;
  } catch {
    // non-JSON error body: keep defaults
  }
  throw new ApiError(response.status, code, message, detail);
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetcher: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetcher(`${this.base}${path}`, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createDataset(grammar: GrammarSpec, config: Partial<PipelineSettings>, name = ""): Promise<JobRef> {
    return this.request("POST", "/v1/datasets", { name, grammar, config });
  }

  augmentDataset(datasetId: string, config: Partial<PipelineSettings>, name = ""): Promise<JobRef> {
    return this.request("POST", `/v1/datasets/${datasetId}/augment`, { name, config });
  }

  datasetSummary(datasetId: string): Promise<DatasetSummary> {
    return this.request("GET", `/v1/datasets/${datasetId}`);
  }

  datasetRecords(datasetId: string): Promise<DatasetRecords> {
    return this.request("GET", `/v1/datasets/${datasetId}/records`);
  }

  imageUrl(datasetId: string, imageId: string): string {
    return `${this.base}/v1/datasets/${datasetId}/images/${imageId}`;
  }

  previewFilter(datasetId: string, params: Partial<FilterSettings>): Promise<FilterReport> {
    return this.request("POST", `/v1/datasets/${datasetId}/filter/preview${filterQuery(params)}`);
  }

  applyFilter(datasetId: string, params: Partial<FilterSettings>): Promise<FilterReport> {
    return this.request("POST", `/v1/datasets/${datasetId}/filter${filterQuery(params)}`);
  }

  trainModel(
    datasetId: string,
    train: TrainSettings,
    options: { merge?: { augmented_id: string; fraction: number }; kfold?: number } = {},
  ): Promise<JobRef> {
    return this.request("POST", "/v1/models", {
      dataset_id: datasetId,
      train,
      merge: options.merge ?? null,
      kfold: options.kfold ?? null,
    });
  }

  modelMetrics(modelId: string): Promise<ModelMetrics> {
    return this.request("GET", `/v1/models/${modelId}/metrics`);
  }

  predictImage(modelId: string, imageB64: string): Promise<Prediction> {
    return this.request("POST", `/v1/models/${modelId}/predict`, { image_b64: imageB64 });
  }

  predictEmbedding(modelId: string, embedding: number[]): Promise<Prediction> {
    return this.request("POST", `/v1/models/${modelId}/predict`, { embedding });
  }

  jobState(jobId: string): Promise<JobState> {
    return this.request("GET", `/v1/jobs/${jobId}`);
  }

  cancelJob(jobId: string): Promise<JobState> {
    return this.request("POST", `/v1/jobs/${jobId}/cancel`);
  }

  /** Stream job events (line-delimited JSON). Resolves when the stream ends. */
  async streamJobEvents(
    jobId: string,
    onEvent: (event: JobEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const response = await this.fetcher(`${this.base}/v1/jobs/${jobId}/events`, { signal });
    if (!response.ok) await parseError(response);
    if (!response.body) throw new ApiError(0, "internal", "event stream has no body");
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffered = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffered += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffered.indexOf("\n")) >= 0) {
        const line = buffered.slice(0, newline).trim();
        buffered = buffered.slice(newline + 1);
        if (line) onEvent(JSON.parse(line) as JobEvent);
      }
    }
    if (buffered.trim()) onEvent(JSON.parse(buffered) as JobEvent);
  }
}

function filterQuery(params: Partial<FilterSettings>): string {
  const query = new URLSearchParams();
  if (params.beta !== undefined) query.set("beta", String(params.beta));
  if (params.retention_target !== undefined) query.set("retention", String(params.retention_target));
  if (params.alpha !== undefined && params.alpha !== null) query.set("alpha", String(params.alpha));
  if (params.per_class !== undefined) query.set("per_class", String(params.per_class));
  const text = query.toString();
  return text ? `?${text}` : "";
}

export const TERMINAL_STATUSES = ["succeeded", "failed", "cancelled"];

export function isTerminal(stageOrStatus: string | undefined): boolean {
  return stageOrStatus !== undefined && TERMINAL_STATUSES.includes(stageOrStatus);
}
