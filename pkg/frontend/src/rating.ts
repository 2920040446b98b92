/** The rating screen: two images of one point, four criteria, 1-4 each.
 *
 * Submission rules:
 *  - disabled until every criterion has a selection (completeness guard);
 *  - the submit handler reports an outcome, and only "accepted" or
 *    "duplicate" count as done — a rejection keeps the selections on
 *    screen and shows the server's reason, never advancing;
 *  - a transport failure keeps the form enabled so the participant can
 *    retry without re-entering anything.
 */

import { el } from "./dom.js";
import type { NextItem } from "./types.js";

export type SubmitOutcome =
  | { kind: "accepted" }
  | { kind: "duplicate"; detail: string }
  | { kind: "rejected"; detail: string }
  | { kind: "network"; detail: string };

export interface RatingFormOptions {
  item: NextItem;
  /** Performs the POST; maps the response to an outcome. */
  onSubmit: (values: Record<string, number>) => Promise<SubmitOutcome>;
  /** Called after an outcome that finishes this item (accepted/duplicate). */
  onDone?: (outcome: SubmitOutcome) => void;
}

export class RatingForm {
  readonly element: HTMLElement;
  private readonly selections = new Map<string, number>();
  private readonly submitButton: HTMLButtonElement;
  private readonly statusLine: HTMLElement;
  private readonly opts: RatingFormOptions;
  private finished = false;

  constructor(opts: RatingFormOptions) {
    this.opts = opts;
    const { item } = opts;
    const levels: number[] = [];
    for (let v = item.scale.scale_min; v <= item.scale.scale_max; v++) levels.push(v);

    const images = el(
      "div",
      { class: "image-pair" },
      item.images.map((src, i) =>
        el("img", { src, alt: `view ${i + 1} of point ${item.point_id}` }),
      ),
    );

    const fieldsets = item.criteria.map((criterion) => {
      const options = levels.map((value) => {
        const descriptor = item.scale.criteria[criterion]?.[String(value)] ?? "";
        const input = el("input", {
          type: "radio",
          name: `${item.point_id}-${criterion}`,
          value: String(value),
        });
        input.addEventListener("change", () => this.select(criterion, value));
        return el("label", { class: "score-option" }, [
          input,
          el("span", { class: "score-value", text: String(value) }),
          el("span", { class: "descriptor", text: descriptor }),
        ]);
      });
      return el("fieldset", { class: "criterion", "data-criterion": criterion }, [
        el("legend", { text: criterion }),
        ...options,
      ]);
    });

    this.submitButton = el("button", { type: "button", text: "Submit rating" });
    this.submitButton.disabled = true;
    this.submitButton.addEventListener("click", () => {
      void this.submit();
    });
    this.statusLine = el("p", { class: "status-line", role: "status" });

    this.element = el("section", { class: "card rating-form", "data-point": item.point_id }, [
      el("h2", { text: `Point ${item.point_id}` }),
      images,
      ...fieldsets,
      this.submitButton,
      this.statusLine,
    ]);
  }

  select(criterion: string, value: number): void {
    if (this.finished) return;
    this.selections.set(criterion, value);
    this.submitButton.disabled = !this.isComplete();
  }

  isComplete(): boolean {
    return this.opts.item.criteria.every((c) => this.selections.has(c));
  }

  values(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const [criterion, value] of this.selections) out[criterion] = value;
    return out;
  }

  isFinished(): boolean {
    return this.finished;
  }

  private setStatus(text: string, tone: "ok" | "error" | "" = ""): void {
    this.statusLine.textContent = text;
    this.statusLine.className = tone ? `status-line ${tone}` : "status-line";
  }

  async submit(): Promise<SubmitOutcome | null> {
    if (this.finished || !this.isComplete()) return null;
    this.submitButton.disabled = true;
    this.setStatus("Submitting…");
    const outcome = await this.opts.onSubmit(this.values());
    switch (outcome.kind) {
      case "accepted":
        this.finished = true;
        this.setStatus("Rating recorded.", "ok");
        this.opts.onDone?.(outcome);
        break;
      case "duplicate":
        // the server already has this item from us — treat as done
        this.finished = true;
        this.setStatus(`Already recorded: ${outcome.detail}`, "ok");
        this.opts.onDone?.(outcome);
        break;
      case "rejected":
        this.setStatus(outcome.detail, "error");
        this.submitButton.disabled = !this.isComplete();
        break;
      case "network":
        this.setStatus(`Connection problem — nothing was lost, try again. (${outcome.detail})`, "error");
        this.submitButton.disabled = !this.isComplete();
        break;
    }
    return outcome;
  }
}
