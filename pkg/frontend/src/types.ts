/** JSON shapes of the verification service's HTTP API. */

/** Element code ("A0".."A16") to tagged line indices; null marks an absent element. */
export type Positions = Record<string, number[] | null>;

export interface NarrativeSummary {
  narrative_id: string;
  story: string | null;
  cohort: string | null;
  status: "pending" | "in_progress" | "verified";
  score_model: number | null;
  score_verified: number | null;
}

export interface Utterance {
  index: number;
  raw: string;
  clean: string;
}

export interface ElementRow {
  element: string;
  label: string;
  name: string;
  episode: number | null;
  category: string;
  description: string;
}

export interface NarrativeDoc {
  narrative_id: string;
  story: string | null;
  cohort: string | null;
  status: "pending" | "in_progress" | "verified";
  version: number;
  utterances: Utterance[];
  element_table: ElementRow[];
  model_positions: Positions | null;
  verified_positions: Positions | null;
  /** Present only when the service is configured with human rater directories. */
  human_positions?: Record<string, Positions | null>;
  /** Elements whose presence the configured human raters disagree on. */
  disagreement_elements?: string[];
}

export interface SaveResponse {
  status: string;
  score: number;
  version: number;
}

export interface HeartbeatResponse {
  status: string;
  review_seconds: number;
}

export interface Progress {
  total: number;
  pending: number;
  in_progress: number;
  verified: number;
  review_seconds_total: number;
}
