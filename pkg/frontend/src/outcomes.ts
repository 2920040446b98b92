/** Maps transport/API failures onto screen outcomes.
 *
 * 409 on a rating means the server already holds an equivalent submission
 * (duplicate after reconnect, or the stage moved on) — the item is done
 * from this participant's perspective and the controller re-syncs from
 * server truth. Other API errors surface the server's reason verbatim
 * without advancing; anything else is a transport problem with a retry
 * affordance.
 */

import { ApiError } from "./api.js";
import type { SubmitOutcome } from "./rating.js";
import type { RankingOutcome } from "./ranking.js";

export function outcomeFromError(error: unknown): SubmitOutcome {
  if (error instanceof ApiError) {
    if (error.status === 409) return { kind: "duplicate", detail: error.detail };
    return { kind: "rejected", detail: error.detail };
  }
  return { kind: "network", detail: error instanceof Error ? error.message : String(error) };
}

export function rankingOutcomeFromError(error: unknown): RankingOutcome {
  if (error instanceof ApiError) return { kind: "rejected", detail: error.detail };
  return { kind: "network", detail: error instanceof Error ? error.message : String(error) };
}
