/** Wire types for the detection service and the exact request encoding.
 *
 * The service is the single source of truth for what an event is; nothing
 * in this client re-derives or post-filters results. Query encoding is
 * deterministic: the same EventQuery always produces byte-identical URLs,
 * which is what makes resubmission and history replay exact.
 */

export interface EventPayload {
  event_id: number;
  pivot_id: string; // tweet id of the cluster pivot
  lat: number;
  lon: number;
  t_start: number;
  t_end: number;
  keywords: string[];
  score: number;
  member_ids: string[];
  detected_at: number;
}

export interface EventsResponse {
  count: number;
  events: EventPayload[];
}

export interface TweetRecord {
  id: string;
  user_id: string;
  timestamp: number;
  lat: number;
  lon: number;
  keywords: string[];
}

export interface EventDetail {
  event: EventPayload;
  members: TweetRecord[];
}

export interface StatusInfo {
  tick: number;
  window: { start: number; end: number; size: number } | null;
  events: number;
  vocabulary: number;
  active_clusters: number;
  [extra: string]: unknown;
}

/** Validated query values, epoch seconds for the time span. */
export interface EventQuery {
  from?: number;
  to?: number;
  keyword?: string;
  lat?: number;
  lon?: number;
  radius_m?: number;
  limit?: number;
}

// Fixed parameter order; identical queries must serialize identically.
export function buildEventsUrl(base: string, q: EventQuery): string {
  const params = new URLSearchParams();
  if (q.from !== undefined) params.set("from", String(q.from));
  if (q.to !== undefined) params.set("to", String(q.to));
  if (q.keyword !== undefined) params.set("keyword", q.keyword);
  if (q.lat !== undefined) params.set("lat", String(q.lat));
  if (q.lon !== undefined) params.set("lon", String(q.lon));
  if (q.radius_m !== undefined) params.set("radius_m", String(q.radius_m));
  if (q.limit !== undefined) params.set("limit", String(q.limit));
  const qs = params.toString();
  return `${base}/events${qs ? "?" + qs : ""}`;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFromResponse(resp: Response): Promise<ApiError> {
  let detail = "";
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep the bare status
  }
  const suffix = detail ? `: ${detail}` : "";
  return new ApiError(`HTTP ${resp.status}${suffix}`, resp.status);
}

/** Thin fetch wrapper. `base` is "" when served by the service itself. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async getJson<T>(url: string, signal?: AbortSignal): Promise<T> {
    const resp = await this.fetchImpl(url, { signal });
    if (!resp.ok) throw await errorFromResponse(resp);
    return (await resp.json()) as T;
  }

  events(q: EventQuery, signal?: AbortSignal): Promise<EventsResponse> {
    return this.getJson(buildEventsUrl(this.base, q), signal);
  }

  detail(eventId: number, signal?: AbortSignal): Promise<EventDetail> {
    return this.getJson(`${this.base}/events/${eventId}`, signal);
  }

  status(signal?: AbortSignal): Promise<StatusInfo> {
    return this.getJson(`${this.base}/status`, signal);
  }
}
