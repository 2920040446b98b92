/** View-state helpers.
 *
 * The UI never fabricates progress: every figure shown is derived from a
 * server response — the session descriptor, the next-item reply, or the
 * session export. These helpers do that derivation in one place so screens
 * stay declarative.
 */

import type { SessionDescriptor, SessionExport, Stage } from "./types.js";

export interface ViewState {
  sessionId: string;
  participantId: string;
  token: string;
  facilitator: boolean;
  stage: Stage;
  nItems: number;
}

export function viewStateFrom(
  descriptor: SessionDescriptor,
  participantId: string,
  token: string,
): ViewState {
  const entry = descriptor.roster.find((r) => r.participant_id === participantId);
  if (!entry) {
    throw new Error(`participant ${JSON.stringify(participantId)} is not on the session roster`);
  }
  return {
    sessionId: descriptor.session_id,
    participantId,
    token,
    facilitator: entry.facilitator,
    stage: descriptor.stage,
    nItems: descriptor.n_items,
  };
}

/** Distinct points this participant has individually rated, per the export. */
export function individualProgress(exportData: SessionExport, participantId: string): number {
  const points = new Set(
    exportData.ratings
      .filter((r) => r.stage === "individual" && r.participant_id === participantId)
      .map((r) => r.point_id),
  );
  return points.size;
}

/** Distinct points with a collective rating, per the export. */
export function collectiveProgress(exportData: SessionExport): number {
  const points = new Set(
    exportData.ratings.filter((r) => r.stage === "collective").map((r) => r.point_id),
  );
  return points.size;
}

export interface CriterionSpread {
  criterion: string;
  n: number;
  min: number;
  max: number;
  mean: number;
}

/** Per-criterion spread of the individual ratings of one point.
 *
 * Facilitator aid for the group-discussion phase: shows where the room
 * disagrees. Derived entirely from the server export.
 */
export function criterionSpread(exportData: SessionExport, pointId: string): CriterionSpread[] {
  const byCriterion = new Map<string, number[]>();
  for (const r of exportData.ratings) {
    if (r.stage !== "individual" || r.point_id !== pointId) continue;
    const bucket = byCriterion.get(r.criterion) ?? [];
    bucket.push(r.value);
    byCriterion.set(r.criterion, bucket);
  }
  const rows: CriterionSpread[] = [];
  for (const [criterion, values] of byCriterion) {
    const total = values.reduce((a, b) => a + b, 0);
    rows.push({
      criterion,
      n: values.length,
      min: Math.min(...values),
      max: Math.max(...values),
      mean: total / values.length,
    });
  }
  return rows;
}
