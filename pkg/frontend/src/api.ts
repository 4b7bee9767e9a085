import type {
  HeartbeatResponse,
  NarrativeDoc,
  NarrativeSummary,
  Positions,
  Progress,
  SaveResponse,
} from "./types.js";

/** The subset of fetch/Response the client relies on, so tests can inject a fake. */
export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export interface HttpRequestInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export type FetchLike = (url: string, init?: HttpRequestInit) => Promise<HttpResponse>;

/** Raised for any non-2xx service response, carrying the parsed error body. */
export class ApiError extends Error {
  /** HTTP status code. */
  readonly status: number;
  /** Service `detail`: a message string, or a list of validation findings for 400. */
  readonly detail: string | string[];
  /** On 409, the narrative's current version token. */
  readonly currentVersion: number | null;

  constructor(status: number, detail: string | string[], currentVersion: number | null = null) {
    super(typeof detail === "string" ? detail : detail.join("; "));
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
    this.currentVersion = currentVersion;
  }

  /** Validation findings as a list regardless of how the service phrased them. */
  get details(): string[] {
    return typeof this.detail === "string" ? [this.detail] : this.detail;
  }
}

function parseDetail(body: unknown): string | string[] {
  if (body !== null && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (Array.isArray(detail)) return detail.map((entry) => String(entry));
  }
  return "unexpected service response";
}

function parseVersion(body: unknown): number | null {
  if (body !== null && typeof body === "object" && "version" in body) {
    const version = (body as { version: unknown }).version;
    if (typeof version === "number") return version;
  }
  return null;
}

/** Thin typed wrapper over the verification service's JSON API. */
export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(fetchFn: FetchLike, baseUrl = "") {
    this.fetchFn = fetchFn;
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request(path: string, init?: HttpRequestInit): Promise<unknown> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, parseDetail(body), parseVersion(body));
    }
    return body;
  }

  listNarratives(): Promise<NarrativeSummary[]> {
    return this.request("/api/narratives") as Promise<NarrativeSummary[]>;
  }

  getNarrative(narrativeId: string): Promise<NarrativeDoc> {
    return this.request(`/api/narratives/${encodeURIComponent(narrativeId)}`) as Promise<NarrativeDoc>;
  }

  putVerified(
    narrativeId: string,
    positions: Positions,
    version: number | null,
  ): Promise<SaveResponse> {
    return this.request(`/api/narratives/${encodeURIComponent(narrativeId)}/verified`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ positions, version }),
    }) as Promise<SaveResponse>;
  }

  heartbeat(narrativeId: string, seconds: number): Promise<HeartbeatResponse> {
    return this.request(`/api/narratives/${encodeURIComponent(narrativeId)}/heartbeat`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ seconds }),
    }) as Promise<HeartbeatResponse>;
  }

  progress(): Promise<Progress> {
    return this.request("/api/progress") as Promise<Progress>;
  }
}
