// Thin typed client over the control-plane HTTP API. Server error bodies
// ({"error": {code, message}}) surface verbatim as ApiError.

import type {
  RunHandle,
  RunReportDoc,
  SpaceDoc,
  SpaceSummary,
  TrialsPage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http-error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listSpaces(): Promise<{ spaces: SpaceSummary[] }> {
    return this.request("/api/spaces");
  }

  getSpace(file: string): Promise<{ file: string; space: SpaceDoc; cardinality: number }> {
    return this.request(`/api/spaces/${encodeURIComponent(file)}`);
  }

  async cardinalityFor(file: string, enabled: string[]): Promise<number> {
    const body = await this.request<{ cardinality: number }>(
      `/api/spaces/${encodeURIComponent(file)}/cardinality`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ enabled }),
      },
    );
    return body.cardinality;
  }

  createRun(spec: Record<string, unknown>): Promise<RunHandle> {
    return this.request("/api/runs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
  }

  getRun(runId: string): Promise<{ run: RunHandle; report: RunReportDoc | null }> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}`);
  }

  listTrials(runId: string, since: number): Promise<TrialsPage> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/trials?since=${since}`);
  }

  stopRun(runId: string): Promise<RunHandle> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/stop`, { method: "POST" });
  }
}
