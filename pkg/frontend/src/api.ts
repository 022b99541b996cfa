import type { ImageKind, ReviewItem, ScoreResult, ScoreSubmission, Stats } from "./types.js";

/** Error carrying the HTTP status so callers can branch on 4xx vs 5xx. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, `HTTP ${response.status}: ${detail}`);
}

/** Thin typed client for the review service; base URL is configurable. */
export class ReviewApi {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async fetchQueue(limit = 50): Promise<ReviewItem[]> {
    const response = await fetch(this.url(`/api/queue?limit=${limit}`));
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as ReviewItem[];
  }

  async submitScore(submission: ScoreSubmission): Promise<ScoreResult> {
    const response = await fetch(
      this.url(`/api/sample/${encodeURIComponent(submission.id)}/score`),
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(submission),
      },
    );
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as ScoreResult;
  }

  async fetchStats(): Promise<Stats> {
    const response = await fetch(this.url("/api/stats"));
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as Stats;
  }

  /** Absolute image URL for an item, resolved against the base URL. */
  imageUrl(item: ReviewItem, kind: ImageKind): string {
    return this.url(item.urls[kind]);
  }
}
