/** Wire types for the rating-collection HTTP API. */

export type Stage = "individual" | "collective" | "ranking" | "closed";

export const STAGE_FLOW: readonly Stage[] = ["individual", "collective", "ranking", "closed"];

/** The 1-4 scale with per-criterion, per-level descriptor text. */
export interface RatingScale {
  scale_min: number;
  scale_max: number;
  criteria: Record<string, Record<string, string>>;
}

export interface RosterEntry {
  participant_id: string;
  groups: string[];
  facilitator: boolean;
}

export interface SessionItem {
  point_id: string;
  images: string[];
}

export interface SessionDescriptor {
  session_id: string;
  stage: Stage;
  created_at: string;
  n_items: number;
  item_order: string[];
  items: SessionItem[];
  roster: RosterEntry[];
}

export interface CreatedSession extends SessionDescriptor {
  token: string;
}

/** One rating task as issued by GET /sessions/{id}/next. */
export interface NextItem {
  point_id: string;
  stage: Stage;
  images: string[];
  criteria: string[];
  scale: RatingScale;
}

export interface RatingSubmission {
  participant_id: string;
  point_id: string;
  stage: Stage;
  values: Record<string, number>;
}

export interface RankingSubmission {
  participant_id: string;
  most_inclusive: string[];
  least_inclusive: string[];
}

export interface ExportedRating {
  participant_id: string;
  point_id: string;
  criterion: string;
  value: number;
  stage: Stage;
  session_id?: string;
}

export interface ExportedRanking {
  session_id: string;
  most_inclusive: string[];
  least_inclusive: string[];
}

export interface SessionExport {
  session_id: string;
  ratings: ExportedRating[];
  rankings: ExportedRanking[];
}
