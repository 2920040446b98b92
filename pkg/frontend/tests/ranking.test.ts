import { describe, expect, it } from "vitest";

import { RankingBoard, RankingSelection, type RankingOutcome } from "../src/ranking.js";
import type { RankingSubmission, SessionItem } from "../src/types.js";

const ITEMS: SessionItem[] = ["p0", "p1", "p2", "p3", "p4", "p5"].map((p) => ({
  point_id: p,
  images: [`/images/${p}_a0`],
}));

describe("RankingSelection", () => {
  it("is complete only at exactly 3 + 3", () => {
    const sel = new RankingSelection();
    expect(sel.isComplete()).toBe(false);
    sel.place("p0", "most");
    sel.place("p1", "most");
    sel.place("p2", "most");
    sel.place("p3", "least");
    sel.place("p4", "least");
    expect(sel.isComplete()).toBe(false); // 3 + 2
    sel.place("p5", "least");
    expect(sel.isComplete()).toBe(true);
  });

  it("moves a point between bins instead of duplicating it", () => {
    const sel = new RankingSelection();
    sel.place("p0", "most");
    expect(sel.binOf("p0")).toBe("most");
    sel.place("p0", "least"); // second placement removes the first
    expect(sel.binOf("p0")).toBe("least");
    expect(sel.mostInclusive()).not.toContain("p0");
    expect(sel.leastInclusive()).toEqual(["p0"]);
  });

  it("refuses a fourth item in a full bin", () => {
    const sel = new RankingSelection();
    sel.place("p0", "most");
    sel.place("p1", "most");
    sel.place("p2", "most");
    expect(sel.place("p3", "most")).toBe(false);
    expect(sel.mostInclusive()).toEqual(["p0", "p1", "p2"]);
    expect(sel.binOf("p3")).toBeNull();
  });

  it("placing an already-placed point in the same bin is a no-op success", () => {
    const sel = new RankingSelection();
    sel.place("p0", "most");
    expect(sel.place("p0", "most")).toBe(true);
    expect(sel.mostInclusive()).toEqual(["p0"]);
  });

  it("remove clears a point from either bin", () => {
    const sel = new RankingSelection();
    sel.place("p0", "most");
    sel.place("p1", "least");
    sel.remove("p0");
    sel.remove("p1");
    expect(sel.binOf("p0")).toBeNull();
    expect(sel.binOf("p1")).toBeNull();
  });

  it("builds the submission payload in placement order", () => {
    const sel = new RankingSelection();
    sel.place("p2", "most");
    sel.place("p0", "most");
    sel.place("p4", "most");
    sel.place("p1", "least");
    sel.place("p5", "least");
    sel.place("p3", "least");
    expect(sel.payload("cara")).toEqual({
      participant_id: "cara",
      most_inclusive: ["p2", "p0", "p4"],
      least_inclusive: ["p1", "p5", "p3"],
    });
  });
});

function mountBoard(
  onSubmit: (payload: RankingSubmission) => Promise<RankingOutcome>,
): RankingBoard {
  const board = new RankingBoard({ items: ITEMS, participantId: "cara", onSubmit });
  document.body.append(board.element);
  return board;
}

function buttonOf(board: RankingBoard, pointId: string, label: string): HTMLButtonElement {
  const row = board.element.querySelector(`.ranking-item[data-point="${pointId}"]`);
  if (!row) throw new Error(`no row for ${pointId}`);
  for (const button of row.querySelectorAll("button")) {
    if (button.textContent === label) return button;
  }
  throw new Error(`no button ${label} on ${pointId}`);
}

function submitButtonOf(board: RankingBoard): HTMLButtonElement {
  for (const button of board.element.querySelectorAll("button")) {
    if (button.textContent === "Submit ranking") return button;
  }
  throw new Error("no submit button");
}

describe("RankingBoard", () => {
  it("disables submit until both bins hold three", () => {
    const board = mountBoard(async () => ({ kind: "accepted" }));
    expect(submitButtonOf(board).disabled).toBe(true);
    buttonOf(board, "p0", "Most inclusive").click();
    buttonOf(board, "p1", "Most inclusive").click();
    buttonOf(board, "p2", "Most inclusive").click();
    buttonOf(board, "p3", "Least inclusive").click();
    buttonOf(board, "p4", "Least inclusive").click();
    expect(submitButtonOf(board).disabled).toBe(true);
    buttonOf(board, "p5", "Least inclusive").click();
    expect(submitButtonOf(board).disabled).toBe(false);
  });

  it("clicking the other bin moves the point — bins can never overlap", () => {
    const board = mountBoard(async () => ({ kind: "accepted" }));
    buttonOf(board, "p0", "Most inclusive").click();
    buttonOf(board, "p0", "Least inclusive").click();
    expect(board.selection.binOf("p0")).toBe("least");
    expect(board.selection.mostInclusive()).toHaveLength(0);
  });

  it("submits the exact 3+3 payload and marks the board done", async () => {
    let received: RankingSubmission | null = null;
    const board = mountBoard(async (payload) => {
      received = payload;
      return { kind: "accepted" };
    });
    buttonOf(board, "p0", "Most inclusive").click();
    buttonOf(board, "p1", "Most inclusive").click();
    buttonOf(board, "p2", "Most inclusive").click();
    buttonOf(board, "p3", "Least inclusive").click();
    buttonOf(board, "p4", "Least inclusive").click();
    buttonOf(board, "p5", "Least inclusive").click();
    const outcome = await board.submit();
    expect(outcome).toEqual({ kind: "accepted" });
    expect(received).toEqual({
      participant_id: "cara",
      most_inclusive: ["p0", "p1", "p2"],
      least_inclusive: ["p3", "p4", "p5"],
    });
    expect(submitButtonOf(board).disabled).toBe(true);
  });

  it("surfaces a server rejection verbatim and stays editable", async () => {
    const board = mountBoard(async () => ({
      kind: "rejected",
      detail: "session is in stage 'individual', not 'ranking'",
    }));
    buttonOf(board, "p0", "Most inclusive").click();
    buttonOf(board, "p1", "Most inclusive").click();
    buttonOf(board, "p2", "Most inclusive").click();
    buttonOf(board, "p3", "Least inclusive").click();
    buttonOf(board, "p4", "Least inclusive").click();
    buttonOf(board, "p5", "Least inclusive").click();
    await board.submit();
    const status = board.element.querySelector(".status-line");
    expect(status?.textContent).toBe("session is in stage 'individual', not 'ranking'");
    expect(submitButtonOf(board).disabled).toBe(false); // may retry after stage advances
  });

  it("reports a full bin instead of silently dropping the click", () => {
    const board = mountBoard(async () => ({ kind: "accepted" }));
    buttonOf(board, "p0", "Most inclusive").click();
    buttonOf(board, "p1", "Most inclusive").click();
    buttonOf(board, "p2", "Most inclusive").click();
    buttonOf(board, "p3", "Most inclusive").click();
    expect(board.selection.binOf("p3")).toBeNull();
    expect(board.element.querySelector(".status-line")?.textContent).toContain("clear one first");
  });
});
