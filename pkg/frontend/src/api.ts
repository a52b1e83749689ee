import type { AnswerBundle, DocumentContext, HealthInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function errorDetail(res: Response | { json(): Promise<unknown> }, fallback: string): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: string; error?: string };
    return body.detail ?? body.error ?? fallback;
  } catch {
    return fallback;
  }
}

/** Thin client for the two endpoints the UI consumes (plus health). */
export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res, res.statusText ?? "request failed"));
    }
    return res.json() as Promise<T>;
  }

  async query(question: string, opts: { k?: number; variant?: string } = {}): Promise<AnswerBundle> {
    const res = await fetch(this.baseUrl + "/api/query", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, ...opts }),
    });
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res, res.statusText ?? "request failed"));
    }
    return res.json() as Promise<AnswerBundle>;
  }

  async documentContext(docId: string, chunkId?: string): Promise<DocumentContext> {
    const params = chunkId ? `?chunk_id=${encodeURIComponent(chunkId)}` : "";
    return this.get(`/api/documents/${encodeURIComponent(docId)}/context${params}`);
  }

  async health(): Promise<HealthInfo> {
    return this.get("/api/health");
  }
}
