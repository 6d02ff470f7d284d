/**
 * Typed client for the annotation service. Consumes exactly the five
 * endpoints the service exposes; no other routes exist.
 */
import type {
  BatchInfo,
  JudgmentInput,
  NextResponse,
  PredictionRecord,
  Progress,
  SamplingRequest,
  SubmitResponse,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Non-2xx reply from the service, with the HTTP status preserved. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service replied ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class AnnotationApi {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  async createBatches(req: SamplingRequest): Promise<[BatchInfo, BatchInfo]> {
    const body = await this.request<{ batches: [BatchInfo, BatchInfo] }>("/batches", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return body.batches;
  }

  next(batchId: string, annotator: string): Promise<NextResponse> {
    const query = new URLSearchParams({ annotator });
    return this.request(`/batches/${encodeURIComponent(batchId)}/next?${query}`);
  }

  submit(batchId: string, instanceId: string, annotator: string,
         judgment: JudgmentInput): Promise<SubmitResponse> {
    return this.request(`/batches/${encodeURIComponent(batchId)}/judgments`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        instance_id: instanceId,
        annotator,
        prediction: judgment.prediction,
        guessed_surface: judgment.guessed_surface ?? null,
        elapsed_ms: judgment.elapsed_ms ?? null,
      }),
    });
  }

  progress(batchId: string): Promise<Progress> {
    return this.request(`/batches/${encodeURIComponent(batchId)}/progress`);
  }

  /** Export judgments as prediction records (the server speaks JSONL). */
  async exportBatches(batchIds: string[]): Promise<PredictionRecord[]> {
    const query = new URLSearchParams();
    for (const id of batchIds) {
      query.append("batch", id);
    }
    const response = await this.fetchImpl(`${this.base}/export?${query}`);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as PredictionRecord);
  }
}
