/** Wire types mirrored from the review service JSON API. */

export type ImageKind = "original" | "tampered" | "overlay";

export interface ReviewItem {
  id: string;
  urls: Record<ImageKind, string>;
  manipulation: string;
  description: string;
  current_score: number | null;
  reviewer: string | null;
}

export interface ScoreSubmission {
  id: string;
  score: number;
  reviewer: string;
}

export interface ScoreResult {
  id: string;
  human_realism: number;
  retained: boolean;
}

export interface Stats {
  pending: number;
  scored: number;
  retained: number;
  pass_rate_by_type: Record<string, number | null>;
}
