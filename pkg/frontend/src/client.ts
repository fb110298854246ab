import type {
  AcceptResult,
  Blueprint,
  DvEntry,
  ErrorEnvelope,
  ProblemList,
  ProblemRow,
  RenderedDoc,
  SessionCreated,
  SessionView,
  StepPayload,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** A failed API call, carrying the server's error envelope fields. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly machineCode: string,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let envelope: ErrorEnvelope | null = null;
  try {
    envelope = (await response.json()) as ErrorEnvelope;
  } catch {
    // non-JSON body: fall through to a generic error below
  }
  if (envelope && envelope.error) {
    const e = envelope.error;
    return new ApiError(e.http_status, e.machine_code, e.human_message, e.details);
  }
  return new ApiError(response.status, "http_error", `HTTP ${response.status}`);
}

/**
 * Thin typed wrapper over the JSON API. The fetch implementation is
 * injectable so tests can record or fake traffic.
 */
export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  listProblems(filters: Record<string, string> = {}): Promise<ProblemList> {
    const query = new URLSearchParams(filters).toString();
    return this.request("GET", `/api/bank/problems${query ? `?${query}` : ""}`);
  }

  getProblem(id: string): Promise<{ bank_ref: string; problem: ProblemRow }> {
    return this.request("GET", `/api/bank/problems/${encodeURIComponent(id)}`);
  }

  createSession(
    blueprint: Blueprint,
    baseSeed?: string,
  ): Promise<SessionCreated> {
    const body: Record<string, unknown> = { blueprint };
    if (baseSeed !== undefined) {
      body.base_seed = baseSeed;
    }
    return this.request("POST", "/api/sessions", body);
  }

  getSession(id: string): Promise<SessionView> {
    return this.request("GET", `/api/sessions/${encodeURIComponent(id)}`);
  }

  /** One iteration; omitting dv reruns the session's latest vector. */
  step(id: string, dv?: DvEntry[]): Promise<StepPayload> {
    const body = dv === undefined ? {} : { decision_vector: dv };
    return this.request("POST", `/api/sessions/${encodeURIComponent(id)}/step`, body);
  }

  accept(id: string): Promise<AcceptResult> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(id)}/accept`);
  }

  abandon(id: string): Promise<{ session_id: string; status: string }> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(id)}/abandon`);
  }

  renderJson(id: string, kind: "exam" | "solutions"): Promise<RenderedDoc> {
    return this.request(
      "GET",
      `/api/sessions/${encodeURIComponent(id)}/render?kind=${kind}&format=json`,
    );
  }

  /** The rendered document exactly as the CLI writes it to disk. */
  async renderText(id: string, kind: "exam" | "solutions"): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/sessions/${encodeURIComponent(id)}/render?kind=${kind}&format=text`,
      { method: "GET" },
    );
    if (!response.ok) {
      throw await toApiError(response);
    }
    return response.text();
  }
}
