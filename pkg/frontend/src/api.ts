import type {
  AuditEntry,
  OverrideRequest,
  ReportDoc,
  RunOptions,
  SessionSummary,
  StatusResponse,
  TranscriptDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private bearerToken: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.bearerToken = token;
  }

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const headers: Record<string, string> = { ...extra };
    if (this.bearerToken) {
      headers["Authorization"] = `Bearer ${this.bearerToken}`;
    }
    return headers;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const resp = await fetch(`${this.baseUrl}/api/v1${path}`, init);
    if (!resp.ok) {
      let detail: unknown = resp.statusText;
      try {
        const body = await resp.json();
        detail = body.detail ?? body;
      } catch {
        // keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  async uploadSession(
    file: File,
    kind: "transcript" | "audio",
    meta: Record<string, unknown>,
    idempotencyKey?: string,
  ): Promise<{ session_id: string }> {
    const form = new FormData();
    form.append(kind, file);
    form.append("meta", JSON.stringify(meta));
    if (idempotencyKey) {
      form.append("idempotency_key", idempotencyKey);
    }
    return this.request("/sessions", {
      method: "POST",
      body: form,
      headers: this.headers(),
    });
  }

  async run(sessionId: string, options: RunOptions = {}): Promise<void> {
    await this.request(`/sessions/${sessionId}/run`, {
      method: "POST",
      body: JSON.stringify(options),
      headers: this.headers({ "Content-Type": "application/json" }),
    });
  }

  status(sessionId: string): Promise<StatusResponse> {
    return this.request(`/sessions/${sessionId}/status`, {
      headers: this.headers(),
    });
  }

  report(sessionId: string): Promise<ReportDoc> {
    return this.request(`/sessions/${sessionId}/report`, {
      headers: this.headers(),
    });
  }

  async reportText(sessionId: string): Promise<string> {
    const resp = await fetch(
      `${this.baseUrl}/api/v1/sessions/${sessionId}/report?format=text`,
      { headers: this.headers() },
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, resp.statusText);
    }
    return resp.text();
  }

  transcript(sessionId: string, which: "raw" | "refined" = "refined"): Promise<TranscriptDoc> {
    return this.request(`/sessions/${sessionId}/transcript?which=${which}`, {
      headers: this.headers(),
    });
  }

  audit(sessionId: string): Promise<AuditEntry[]> {
    return this.request(`/sessions/${sessionId}/audit`, {
      headers: this.headers(),
    });
  }

  sessions(): Promise<SessionSummary[]> {
    return this.request("/sessions", { headers: this.headers() });
  }

  override(
    sessionId: string,
    indicatorId: string,
    body: OverrideRequest,
  ): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${sessionId}/indicators/${indicatorId}/override`, {
      method: "POST",
      body: JSON.stringify(body),
      headers: this.headers({ "Content-Type": "application/json" }),
    });
  }
}
