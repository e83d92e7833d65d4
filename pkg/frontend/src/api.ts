/** Thin REST client for the assist service; fetch is injectable for tests. */

import type {
  CategoriesResponse,
  ClassifyResponse,
  HistoryResponse,
  SubmitAnswerRequest,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  /** 503 from /classify or /model means: no trained model yet. */
  get modelMissing(): boolean {
    return this.status === 503;
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class AssistClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  classify(text: string, span?: [number, number]): Promise<ClassifyResponse> {
    return this.request<ClassifyResponse>("/classify", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(span ? { text, span } : { text }),
    });
  }

  submitAnswer(payload: SubmitAnswerRequest): Promise<{ record_id: string }> {
    return this.request<{ record_id: string }>("/answers", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  categories(): Promise<CategoriesResponse> {
    return this.request<CategoriesResponse>("/categories");
  }

  history(sender: string): Promise<HistoryResponse> {
    return this.request<HistoryResponse>(`/history/${encodeURIComponent(sender)}`);
  }

  health(): Promise<{ status: string; model_loaded: boolean }> {
    return this.request<{ status: string; model_loaded: boolean }>("/health");
  }
}
