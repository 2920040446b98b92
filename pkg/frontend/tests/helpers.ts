/** Shared test scaffolding: canned scale/items and a fetch stub. */

import type { NextItem, RatingScale } from "../src/types.js";

export const TEST_SCALE: RatingScale = {
  scale_min: 1,
  scale_max: 4,
  criteria: {
    inclusivity: { "1": "i one", "2": "i two", "3": "i three", "4": "i four" },
    aesthetics: { "1": "a one", "2": "a two", "3": "a three", "4": "a four" },
    practicality: { "1": "p one", "2": "p two", "3": "p three", "4": "p four" },
    accessibility: { "1": "c one", "2": "c two", "3": "c three", "4": "c four" },
  },
};

export const CRITERIA = ["inclusivity", "aesthetics", "practicality", "accessibility"];

export function testItem(pointId = "p0", stage: NextItem["stage"] = "individual"): NextItem {
  return {
    point_id: pointId,
    stage,
    images: [`/images/${pointId}_a0`, `/images/${pointId}_a1`],
    criteria: [...CRITERIA],
    scale: TEST_SCALE,
  };
}

/** Select a value in a RatingForm by clicking its radio input like a user. */
export function clickScore(root: HTMLElement, criterion: string, value: number): void {
  const input = root.querySelector<HTMLInputElement>(
    `fieldset[data-criterion="${criterion}"] input[value="${value}"]`,
  );
  if (!input) throw new Error(`no radio for ${criterion}=${value}`);
  input.checked = true;
  input.dispatchEvent(new Event("change"));
}

export interface RecordedRequest {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

/** A fetch stub that records requests and replays queued responses. */
export function fetchStub(
  responses: { status: number; body?: unknown }[],
): { fetchFn: (input: string, init?: RequestInit) => Promise<Response>; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const queue = [...responses];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    requests.push({
      url: input,
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const next = queue.shift();
    if (!next) throw new Error("fetch stub exhausted");
    if (next.status === 204) return new Response(null, { status: 204 });
    return new Response(JSON.stringify(next.body ?? {}), {
      status: next.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchFn, requests };
}
