/** Thin typed client over the service HTTP API with an injectable fetch,
 * so tests can script the transport and the browser passes window.fetch. */

import type { ApiErrorBody, MessageResponse, SessionCreated, Transcript } from "./types.js";

export interface FetchResponseLike {
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<FetchResponseLike>;

/** A failed API call that carried a machine-readable error envelope. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function asApiError(status: number, body: unknown): ApiError {
  const envelope = body as Partial<ApiErrorBody>;
  const code = envelope?.error?.code ?? "unknown_error";
  const message = envelope?.error?.message ?? `request failed with status ${status}`;
  return new ApiError(status, code, message);
}

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike,
    private readonly baseUrl: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const parsed = await response.json();
    if (response.status >= 400) {
      throw asApiError(response.status, parsed);
    }
    return parsed as T;
  }

  createSession(): Promise<SessionCreated> {
    return this.request("POST", "/sessions");
  }

  postMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/messages`, { text });
  }

  getTranscript(sessionId: string): Promise<Transcript> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/transcript`);
  }
}
