// Typed client for the annotation service. Every dashboard talks to the
// backend exclusively through this module; nothing here caches server state.

export interface GeoPoint {
  latitude: number;
  longitude: number;
}

export interface RideEvent {
  event_id: string;
  context: "rail";
  external_key: string;
  train_id: string;
  occurred_at: string;
  location: GeoPoint;
  status: "labeled" | "unlabeled";
}

export interface TrainCarEvent {
  event_id: string;
  context: "train_car";
  external_key: string;
  train_car_id: string;
  entered_at: string;
  exited_at: string;
  status: "labeled" | "unlabeled";
}

export type AnyEvent = RideEvent | TrainCarEvent;

export interface Label {
  label_id: string;
  name: string;
  context: string;
  created_by: string;
  created_at: string;
}

export interface Annotator {
  annotator_id: string;
  username: string;
  role: string;
  display_name: string;
}

export interface UiConfig {
  map_tile_url: string;
  display_timezone: string;
  locale: string;
}

export interface LoginResponse {
  token: string;
  expires_at: string;
  annotator: Annotator;
  dashboard_route: string;
  ui: UiConfig;
}

export interface VerificationSummary {
  event: Record<string, unknown>;
  annotator: string;
  labels: Record<string, string[]>;
}

export interface StudyRoundInfo {
  kind: string;
  state: "pending" | "open" | "closed";
  started_at: string | null;
  ended_at: string | null;
  end_reason: string | null;
  duration_seconds: number | null;
  task_results: Array<{ task_id: string; completed: boolean; seconds: number }>;
  log: Array<{ timestamp: string; kind: string; action: string }>;
}

export interface StudySession {
  session_id: string;
  participant: Record<string, unknown>;
  group: string;
  round_order: [string, string];
  rounds: Record<string, StudyRoundInfo>;
  created_at: string;
  notes?: string;
}

export interface ExportRecord {
  event: { event_id: string } & Record<string, unknown>;
  labels: Record<string, string[]>;
  annotator: string;
  submitted_at: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type Query = Record<string, string | undefined>;

export class ApiClient {
  token: string | null = null;

  constructor(readonly baseUrl: string = "") {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    query?: Query,
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (query) {
      const params = new URLSearchParams();
      for (const [key, value] of Object.entries(query)) {
        if (value !== undefined) params.set(key, value);
      }
      const qs = params.toString();
      if (qs) url += "?" + qs;
    }
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = "Bearer " + this.token;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(url, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = "error";
      let message = text;
      try {
        const parsed = JSON.parse(text);
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // not a structured error, keep the raw body
      }
      throw new ApiError(response.status, code, message);
    }
    const contentType = response.headers.get("content-type") ?? "";
    if (contentType.includes("ndjson") || contentType.startsWith("text/")) {
      return text as unknown as T;
    }
    return JSON.parse(text) as T;
  }

  async login(username: string, password: string): Promise<LoginResponse> {
    const result = await this.request<LoginResponse>("POST", "/login", {
      username,
      password,
    });
    this.token = result.token;
    return result;
  }

  logout(): void {
    this.token = null;
  }

  async listEvents(options?: {
    context?: string;
    status?: string;
  }): Promise<AnyEvent[]> {
    const result = await this.request<{ events: AnyEvent[] }>(
      "GET",
      "/events",
      undefined,
      { context: options?.context, status: options?.status },
    );
    return result.events;
  }

  getEvent(eventId: string): Promise<AnyEvent> {
    return this.request("GET", `/events/${encodeURIComponent(eventId)}`);
  }

  async listLabels(context: string): Promise<Label[]> {
    const result = await this.request<{ labels: Label[] }>(
      "GET",
      "/labels",
      undefined,
      { context },
    );
    return result.labels;
  }

  createLabel(name: string, context: string): Promise<Label> {
    return this.request("POST", "/labels", { name, context });
  }

  stageDraft(
    eventId: string,
    selections: Record<string, string[]>,
  ): Promise<{ event_id: string; selections: Record<string, string[]> }> {
    return this.request("POST", "/drafts", { event_id: eventId, selections });
  }

  draftSummary(eventId: string): Promise<VerificationSummary> {
    return this.request(
      "GET",
      `/drafts/${encodeURIComponent(eventId)}/summary`,
    );
  }

  submitDraft(eventId: string): Promise<Record<string, unknown>> {
    return this.request(
      "POST",
      `/drafts/${encodeURIComponent(eventId)}/submit`,
    );
  }

  ingestWorkshopVisit(body: {
    train_car_id: string;
    entered_at: string;
    exited_at: string;
    external_key: string;
  }): Promise<TrainCarEvent & { created: boolean }> {
    return this.request("POST", "/ingest/workshop-visit", body);
  }

  ingestButtonPress(body: {
    train_id: string;
    occurred_at: string;
    location: GeoPoint;
    external_key: string;
  }): Promise<RideEvent & { created: boolean }> {
    return this.request("POST", "/ingest/button-press", body);
  }

  async exportRecords(since?: string): Promise<ExportRecord[]> {
    const text = await this.request<string>("GET", "/export", undefined, {
      since,
    });
    return text
      .split("\n")
      .filter((line) => line.trim() !== "")
      .map((line) => JSON.parse(line) as ExportRecord);
  }

  startSession(
    participant: {
      participant_id: string;
      age: number;
      gender?: string;
      occupation?: string;
    },
    notes = "",
  ): Promise<StudySession> {
    return this.request("POST", "/study/sessions", { participant, notes });
  }

  recordInteraction(
    sessionId: string,
    body: { round: string; timestamp: string; kind: string; action: string },
  ): Promise<{ acknowledged: boolean }> {
    return this.request(
      "POST",
      `/study/sessions/${encodeURIComponent(sessionId)}/interactions`,
      body,
    );
  }

  closeRound(
    sessionId: string,
    kind: string,
    at: string,
  ): Promise<StudyRoundInfo> {
    return this.request(
      "POST",
      `/study/sessions/${encodeURIComponent(sessionId)}/rounds/${kind}/close`,
      { at },
    );
  }

  recordQuestionnaire(
    sessionId: string,
    instrument: string,
    responses: number[],
    round?: string,
  ): Promise<{ recorded: boolean }> {
    return this.request(
      "POST",
      `/study/sessions/${encodeURIComponent(sessionId)}/questionnaires`,
      { instrument, round: round ?? null, responses },
    );
  }

  sessionMetrics(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(
      "GET",
      `/study/sessions/${encodeURIComponent(sessionId)}/metrics`,
    );
  }

  studyReport(): Promise<Record<string, unknown>> {
    return this.request("GET", "/study/report");
  }
}

export function isUnauthorized(error: unknown): boolean {
  return error instanceof ApiError && error.status === 401;
}

// fetch rejects with a TypeError when the service cannot be reached at all;
// that is the only case worth buffering and retrying
export function isNetworkFailure(error: unknown): boolean {
  return !(error instanceof ApiError) && error instanceof TypeError;
}
