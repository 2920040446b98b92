/** The ranking task: pick exactly three most-inclusive and three
 * least-inclusive streetscapes from the session's rated points.
 *
 * Disjointness is structural: placing a point in one bin removes it from
 * the other, so an overlapping submission cannot be constructed. A full
 * bin refuses further placements, and submission stays disabled until
 * both bins hold exactly the required count.
 */

import { el, clear } from "./dom.js";
import type { RankingSubmission, SessionItem } from "./types.js";

export type Bin = "most" | "least";

export class RankingSelection {
  private readonly most: string[] = [];
  private readonly least: string[] = [];

  constructor(readonly required = 3) {}

  private bin(which: Bin): string[] {
    return which === "most" ? this.most : this.least;
  }

  /** Place a point into a bin. Returns false when the bin is full.
   * A point already in the other bin moves — the earlier placement is
   * removed first, so the bins can never overlap.
   */
  place(pointId: string, which: Bin): boolean {
    const target = this.bin(which);
    if (target.includes(pointId)) return true;
    if (target.length >= this.required) return false;
    this.remove(pointId);
    target.push(pointId);
    return true;
  }

  remove(pointId: string): void {
    for (const bucket of [this.most, this.least]) {
      const at = bucket.indexOf(pointId);
      if (at >= 0) bucket.splice(at, 1);
    }
  }

  binOf(pointId: string): Bin | null {
    if (this.most.includes(pointId)) return "most";
    if (this.least.includes(pointId)) return "least";
    return null;
  }

  mostInclusive(): string[] {
    return [...this.most];
  }

  leastInclusive(): string[] {
    return [...this.least];
  }

  isComplete(): boolean {
    return this.most.length === this.required && this.least.length === this.required;
  }

  payload(participantId: string): RankingSubmission {
    return {
      participant_id: participantId,
      most_inclusive: this.mostInclusive(),
      least_inclusive: this.leastInclusive(),
    };
  }
}

export type RankingOutcome =
  | { kind: "accepted" }
  | { kind: "rejected"; detail: string }
  | { kind: "network"; detail: string };

export interface RankingBoardOptions {
  items: SessionItem[];
  participantId: string;
  onSubmit: (payload: RankingSubmission) => Promise<RankingOutcome>;
  onDone?: () => void;
}

export class RankingBoard {
  readonly element: HTMLElement;
  readonly selection: RankingSelection;
  private readonly opts: RankingBoardOptions;
  private readonly list: HTMLElement;
  private readonly counts: HTMLElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly statusLine: HTMLElement;
  private finished = false;

  constructor(opts: RankingBoardOptions) {
    this.opts = opts;
    this.selection = new RankingSelection();
    this.list = el("div", { class: "ranking-list" });
    this.counts = el("div", { class: "bin-counts" });
    this.submitButton = el("button", { type: "button", text: "Submit ranking" });
    this.submitButton.disabled = true;
    this.submitButton.addEventListener("click", () => {
      void this.submit();
    });
    this.statusLine = el("p", { class: "status-line", role: "status" });
    this.element = el("section", { class: "card ranking-board" }, [
      el("h2", { text: "Rank the streetscapes" }),
      el("p", {
        class: "progress-note",
        text:
          `Choose the ${this.selection.required} most inclusive and the ` +
          `${this.selection.required} least inclusive streetscapes.`,
      }),
      this.list,
      this.counts,
      this.submitButton,
      this.statusLine,
    ]);
    this.render();
  }

  place(pointId: string, which: Bin): boolean {
    if (this.finished) return false;
    const placed = this.selection.place(pointId, which);
    if (!placed) {
      this.setStatus(
        `The ${which === "most" ? "most" : "least"}-inclusive list already has ` +
          `${this.selection.required} items — clear one first.`,
        "error",
      );
    } else {
      this.setStatus("");
    }
    this.render();
    return placed;
  }

  clearPoint(pointId: string): void {
    if (this.finished) return;
    this.selection.remove(pointId);
    this.setStatus("");
    this.render();
  }

  private setStatus(text: string, tone: "ok" | "error" | "" = ""): void {
    this.statusLine.textContent = text;
    this.statusLine.className = tone ? `status-line ${tone}` : "status-line";
  }

  private render(): void {
    clear(this.list);
    for (const item of this.opts.items) {
      const within = this.selection.binOf(item.point_id);
      const row = el("div", {
        class: `ranking-item${within ? ` in-${within}` : ""}`,
        "data-point": item.point_id,
      });
      if (item.images[0]) row.append(el("img", { src: item.images[0], alt: item.point_id }));
      row.append(el("span", { class: "point-label", text: item.point_id }));
      const mostButton = el("button", { type: "button", class: "bin-button", text: "Most inclusive" });
      mostButton.addEventListener("click", () => this.place(item.point_id, "most"));
      const leastButton = el("button", { type: "button", class: "bin-button", text: "Least inclusive" });
      leastButton.addEventListener("click", () => this.place(item.point_id, "least"));
      const clearButton = el("button", { type: "button", class: "bin-button quiet", text: "Clear" });
      clearButton.addEventListener("click", () => this.clearPoint(item.point_id));
      row.append(mostButton, leastButton, clearButton);
      row.append(
        el("span", {
          class: "bin-tag",
          text: within === "most" ? "most inclusive" : within === "least" ? "least inclusive" : "",
        }),
      );
      this.list.append(row);
    }
    clear(this.counts);
    this.counts.append(
      el("span", {
        text: `Most inclusive: ${this.selection.mostInclusive().length}/${this.selection.required}`,
      }),
      el("span", {
        text: `Least inclusive: ${this.selection.leastInclusive().length}/${this.selection.required}`,
      }),
    );
    this.submitButton.disabled = this.finished || !this.selection.isComplete();
  }

  async submit(): Promise<RankingOutcome | null> {
    if (this.finished || !this.selection.isComplete()) return null;
    this.submitButton.disabled = true;
    this.setStatus("Submitting…");
    const outcome = await this.opts.onSubmit(this.selection.payload(this.opts.participantId));
    switch (outcome.kind) {
      case "accepted":
        this.finished = true;
        this.setStatus("Ranking recorded.", "ok");
        this.opts.onDone?.();
        break;
      case "rejected":
        this.setStatus(outcome.detail, "error");
        this.render();
        break;
      case "network":
        this.setStatus(`Connection problem — nothing was lost, try again. (${outcome.detail})`, "error");
        this.render();
        break;
    }
    return outcome;
  }
}
