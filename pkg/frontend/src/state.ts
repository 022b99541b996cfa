import { ApiError } from "./api.js";
import type { ReviewItem, ScoreResult, ScoreSubmission, Stats } from "./types.js";

/** The slice of the HTTP client the session depends on (mockable in tests). */
export interface ReviewBackend {
  fetchQueue(limit?: number): Promise<ReviewItem[]>;
  submitScore(submission: ScoreSubmission): Promise<ScoreResult>;
  fetchStats(): Promise<Stats>;
}

/** Everything the renderer needs; rebuilt from server responses alone. */
export interface SessionView {
  item: ReviewItem | null;
  queuePosition: number;
  queueLength: number;
  overlayVisible: boolean;
  stats: Stats | null;
  error: string | null;
  /** submission in flight: score keys must be ignored */
  busy: boolean;
  /** current item's image failed to load: scoring disabled */
  imageBroken: boolean;
  queueEmpty: boolean;
}

/**
 * Review session driving one pending queue.
 *
 * Scores are submitted at most once per item until the server answers;
 * a 2xx advances past the item, any failure keeps the position and
 * surfaces the error.  The overlay toggle is purely local state.
 */
export class ReviewSession {
  private queue: ReviewItem[] = [];
  private position = 0;
  private overlayVisible = false;
  private stats: Stats | null = null;
  private error: string | null = null;
  private inFlight: string | null = null;
  private broken = new Set<string>();

  constructor(
    private readonly api: ReviewBackend,
    private readonly reviewer: string,
    private readonly onChange: (view: SessionView) => void = () => {},
  ) {}

  get view(): SessionView {
    const item = this.queue[this.position] ?? null;
    return {
      item,
      queuePosition: this.position,
      queueLength: this.queue.length,
      overlayVisible: this.overlayVisible,
      stats: this.stats,
      error: this.error,
      busy: this.inFlight !== null,
      imageBroken: item !== null && this.broken.has(item.id),
      queueEmpty: this.queue.length === 0,
    };
  }

  private emit(): void {
    this.onChange(this.view);
  }

  /** Reload queue and stats from the server; position resets to the front. */
  async refresh(limit = 50): Promise<void> {
    try {
      const [queue, stats] = await Promise.all([
        this.api.fetchQueue(limit),
        this.api.fetchStats(),
      ]);
      this.queue = queue;
      this.stats = stats;
      this.position = 0;
      this.error = null;
    } catch (err) {
      this.error = describeError(err);
    }
    this.emit();
  }

  async pollStats(): Promise<void> {
    try {
      this.stats = await this.api.fetchStats();
      this.emit();
    } catch {
      // transient; the next poll retries
    }
  }

  toggleOverlay(): void {
    this.overlayVisible = !this.overlayVisible;
    this.emit();
  }

  next(): void {
    if (this.position + 1 < this.queue.length) {
      this.position += 1;
      this.emit();
    }
  }

  prev(): void {
    if (this.position > 0) {
      this.position -= 1;
      this.emit();
    }
  }

  /** The current item's image failed to fetch; block scoring it. */
  markImageBroken(itemId: string): void {
    this.broken.add(itemId);
    this.emit();
  }

  /**
   * Submit a 1-5 score for the current item.
   *
   * Ignored while another submission is pending or when the item's image
   * is broken.  Resolves to true when the score was accepted.
   */
  async submitScore(score: number): Promise<boolean> {
    const item = this.queue[this.position];
    if (!item || this.inFlight !== null || this.broken.has(item.id)) {
      return false;
    }
    if (!Number.isInteger(score) || score < 1 || score > 5) {
      this.error = `score must be 1-5, got ${score}`;
      this.emit();
      return false;
    }
    this.inFlight = item.id;
    this.emit();
    try {
      await this.api.submitScore({ id: item.id, score, reviewer: this.reviewer });
      this.queue.splice(this.position, 1);
      if (this.position >= this.queue.length) {
        this.position = Math.max(0, this.queue.length - 1);
      }
      this.error = null;
      if (this.stats) {
        // optimistic; the next stats poll corrects any drift
        this.stats = {
          ...this.stats,
          pending: Math.max(0, this.stats.pending - 1),
          scored: this.stats.scored + 1,
        };
      }
      return true;
    } catch (err) {
      this.error = describeError(err);
      return false;
    } finally {
      this.inFlight = null;
      this.emit();
    }
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}

/** Poll /api/stats on an interval; returns a stop function. */
export function startStatsPolling(
  session: ReviewSession,
  intervalMs = 10_000,
): () => void {
  const timer = setInterval(() => {
    void session.pollStats();
  }, intervalMs);
  return () => clearInterval(timer);
}
