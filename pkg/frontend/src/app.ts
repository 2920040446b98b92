/** Session controller: joins a session, then walks the participant through
 * the stages the server reports. Every transition re-asks the server —
 * the UI never advances on its own guess, and a submission only counts
 * once the server acknowledged it.
 */

import { ApiClient, ApiError } from "./api.js";
import { el, clear } from "./dom.js";
import { outcomeFromError, rankingOutcomeFromError } from "./outcomes.js";
import { RatingForm } from "./rating.js";
import { RankingBoard, type RankingOutcome } from "./ranking.js";
import {
  collectiveProgress,
  criterionSpread,
  individualProgress,
  viewStateFrom,
  type ViewState,
} from "./state.js";
import type { RankingSubmission, SessionDescriptor, Stage } from "./types.js";

export class SessionApp {
  private state: ViewState | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient = new ApiClient(""),
  ) {}

  start(): void {
    this.renderJoin();
  }

  // ---- join -----------------------------------------------------------

  private renderJoin(errorText = ""): void {
    clear(this.root);
    const sessionInput = el("input", { id: "join-session", autocomplete: "off" });
    const tokenInput = el("input", { id: "join-token", autocomplete: "off" });
    const participantInput = el("input", { id: "join-participant", autocomplete: "off" });
    const status = el("p", { class: `status-line${errorText ? " error" : ""}`, text: errorText });
    const button = el("button", { type: "submit", text: "Join session" });
    const form = el("form", { class: "join-form" }, [
      el("label", { for: "join-session", text: "Session id" }),
      sessionInput,
      el("label", { for: "join-token", text: "Session token" }),
      tokenInput,
      el("label", { for: "join-participant", text: "Your participant id" }),
      participantInput,
      el("div", { class: "form-actions" }, [button]),
      status,
    ]);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.join(sessionInput.value.trim(), tokenInput.value.trim(), participantInput.value.trim());
    });
    this.root.append(
      el("div", { class: "card" }, [el("h1", { text: "Street rating session" }), form]),
    );
  }

  async join(sessionId: string, token: string, participantId: string): Promise<void> {
    try {
      const descriptor = await this.api.descriptor(sessionId, token);
      this.state = viewStateFrom(descriptor, participantId, token);
      await this.showStage(descriptor);
    } catch (error) {
      const detail =
        error instanceof ApiError
          ? error.detail
          : error instanceof Error
            ? error.message
            : String(error);
      this.renderJoin(detail);
    }
  }

  // ---- stage routing ----------------------------------------------------

  private async refresh(): Promise<void> {
    if (!this.state) return;
    const descriptor = await this.api.descriptor(this.state.sessionId, this.state.token);
    this.state.stage = descriptor.stage;
    await this.showStage(descriptor);
  }

  private async showStage(descriptor: SessionDescriptor): Promise<void> {
    const state = this.state;
    if (!state) return;
    clear(this.root);
    this.root.append(this.sessionBar(state));
    switch (descriptor.stage) {
      case "individual":
        await this.showRatingLoop(descriptor, "individual");
        break;
      case "collective":
        if (state.facilitator) {
          await this.showRatingLoop(descriptor, "collective");
        } else {
          await this.showDiscussionWait(descriptor);
        }
        break;
      case "ranking":
        this.showRanking(descriptor);
        break;
      case "closed":
        await this.showClosed();
        break;
    }
    if (state.facilitator && descriptor.stage !== "closed") {
      this.root.append(this.facilitatorTools(descriptor));
    }
  }

  private sessionBar(state: ViewState): HTMLElement {
    return el("div", { class: "session-bar" }, [
      el("span", { class: "stage-chip", text: state.stage }),
      el("strong", { text: `Session ${state.sessionId}` }),
      el("span", {
        class: "who",
        text: `${state.participantId}${state.facilitator ? " (facilitator)" : ""}`,
      }),
    ]);
  }

  // ---- rating loop ------------------------------------------------------

  private async showRatingLoop(
    descriptor: SessionDescriptor,
    stage: Stage,
  ): Promise<void> {
    const state = this.state;
    if (!state) return;
    const item = await this.api.nextItem(state.sessionId, state.token, state.participantId);
    const host = el("div", { class: "stage-host" });
    this.root.append(host);

    const progress = await this.progressNote(stage);
    if (progress) host.append(progress);

    if (item === null) {
      host.append(
        el("div", { class: "card" }, [
          el("p", {
            class: "waiting",
            text:
              stage === "individual"
                ? "You have rated every streetscape — waiting for the group to finish."
                : "Every streetscape has a collective rating.",
          }),
          this.refreshButton(),
        ]),
      );
      return;
    }

    const form = new RatingForm({
      item,
      onSubmit: async (values) => {
        try {
          await this.api.submitRating(state.sessionId, state.token, {
            participant_id: state.participantId,
            point_id: item.point_id,
            stage,
            values,
          });
          return { kind: "accepted" };
        } catch (error) {
          return outcomeFromError(error);
        }
      },
      onDone: () => {
        // ask the server what comes next; never assume locally
        void this.refresh();
      },
    });
    host.append(form.element);

    if (stage === "collective" && state.facilitator) {
      const spread = await this.spreadPanel(item.point_id);
      if (spread) host.append(spread);
    }
  }

  private async progressNote(stage: Stage): Promise<HTMLElement | null> {
    const state = this.state;
    if (!state) return null;
    try {
      const exportData = await this.api.exportSession(state.sessionId, state.token);
      const done =
        stage === "individual"
          ? individualProgress(exportData, state.participantId)
          : collectiveProgress(exportData);
      return el("p", {
        class: "progress-note",
        text: `${done} of ${state.nItems} streetscapes rated`,
      });
    } catch {
      return null; // progress is a nicety; the rating flow works without it
    }
  }

  private async spreadPanel(pointId: string): Promise<HTMLElement | null> {
    const state = this.state;
    if (!state) return null;
    try {
      const exportData = await this.api.exportSession(state.sessionId, state.token);
      const rows = criterionSpread(exportData, pointId);
      if (!rows.length) return null;
      const table = el("table", { class: "spread" }, [
        el("thead", {}, [
          el("tr", {}, [
            el("th", { text: "criterion" }),
            el("th", { text: "n" }),
            el("th", { text: "min" }),
            el("th", { text: "mean" }),
            el("th", { text: "max" }),
          ]),
        ]),
        el(
          "tbody",
          {},
          rows.map((r) =>
            el("tr", {}, [
              el("td", { text: r.criterion }),
              el("td", { text: String(r.n) }),
              el("td", { text: String(r.min) }),
              el("td", { text: r.mean.toFixed(2) }),
              el("td", { text: String(r.max) }),
            ]),
          ),
        ),
      ]);
      return el("div", { class: "card spread-panel" }, [
        el("h3", { text: "Individual ratings of this point" }),
        table,
      ]);
    } catch {
      return null;
    }
  }

  private async showDiscussionWait(_descriptor: SessionDescriptor): Promise<void> {
    this.root.append(
      el("div", { class: "card" }, [
        el("p", {
          class: "waiting",
          text: "Group discussion in progress — the facilitator records the collective rating.",
        }),
        this.refreshButton(),
      ]),
    );
  }

  // ---- ranking ----------------------------------------------------------

  private showRanking(descriptor: SessionDescriptor): void {
    const state = this.state;
    if (!state) return;
    const board = new RankingBoard({
      items: descriptor.items,
      participantId: state.participantId,
      onSubmit: async (payload: RankingSubmission) => {
        try {
          await this.api.submitRanking(state.sessionId, state.token, payload);
          return { kind: "accepted" } as RankingOutcome;
        } catch (error) {
          return rankingOutcomeFromError(error);
        }
      },
      onDone: () => {
        void this.refresh();
      },
    });
    this.root.append(board.element);
  }

  // ---- closed -----------------------------------------------------------

  private async showClosed(): Promise<void> {
    const state = this.state;
    if (!state) return;
    const card = el("div", { class: "card" }, [el("h2", { text: "Session closed" })]);
    try {
      const exportData = await this.api.exportSession(state.sessionId, state.token);
      card.append(
        el("p", {
          text:
            `${exportData.ratings.length} rating entries and ` +
            `${exportData.rankings.length} rankings recorded. Thank you!`,
        }),
      );
    } catch {
      card.append(el("p", { text: "Thank you for taking part." }));
    }
    this.root.append(card);
  }

  // ---- facilitator ------------------------------------------------------

  private facilitatorTools(descriptor: SessionDescriptor): HTMLElement {
    const state = this.state;
    const status = el("p", { class: "status-line" });
    const advance = el("button", {
      type: "button",
      class: "quiet",
      text: `Advance past ${descriptor.stage}`,
    });
    advance.addEventListener("click", () => {
      if (!state) return;
      void (async () => {
        try {
          await this.api.advance(state.sessionId, state.token);
          await this.refresh();
        } catch (error) {
          status.textContent = error instanceof ApiError ? error.detail : String(error);
          status.className = "status-line error";
        }
      })();
    });
    return el("div", { class: "facilitator-tools" }, [advance, status]);
  }

  private refreshButton(): HTMLElement {
    const button = el("button", { type: "button", class: "quiet", text: "Check again" });
    button.addEventListener("click", () => {
      void this.refresh();
    });
    return button;
  }
}

// Browser entry point: mount on #app when served as a page. Guarded so the
// module can be imported headlessly by tests without touching the document.
const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  new SessionApp(mount).start();
}
