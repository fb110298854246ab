import { ApiClient, ApiError } from "./client.js";
import { WorkingVector } from "./dv.js";
import type { DraftOutcome, DvEntry, SessionView } from "./types.js";
import {
  renderAcceptedNote,
  renderEmptyState,
  renderErrorToast,
  renderFeasibilityBanner,
  renderMetricsPanel,
  renderPreview,
  renderSlotCards,
  renderTimeline,
} from "./views.js";

function workingFromEntries(entries: DvEntry[]): WorkingVector {
  const wv = new WorkingVector(entries.length);
  entries.forEach((entry, i) => {
    if (entry !== "R") {
      wv.pin(i + 1, entry.M);
    }
  });
  return wv;
}

/**
 * Controller for one session: holds the server's view plus the local
 * working decision vector, and re-renders the whole console on every
 * state change. Run/Accept are disabled while a request is in flight;
 * the server-side per-session lock is the actual guard.
 */
export class ExamConsole {
  private view: SessionView | null = null;
  private working: WorkingVector | null = null;
  private busy = false;
  private toast = "";
  private preview: { title: string; content: string } | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly root: HTMLElement,
    private readonly confirmAccept: () => boolean = () =>
      window.confirm("Accept this draft and record usage in the bank?"),
  ) {
    root.addEventListener("click", (event) => {
      void this.onClick(event);
    });
  }

  async load(sessionId: string): Promise<void> {
    await this.guard(async () => {
      this.view = await this.client.getSession(sessionId);
      this.working = workingFromEntries(this.latestEntries());
      this.preview = null;
    });
  }

  private latestEntries(): DvEntry[] {
    const steps = this.view?.steps ?? [];
    const last = steps[steps.length - 1];
    if (last) {
      return last.decision_vector;
    }
    return (this.view?.blueprint.slots ?? []).map(() => "R" as const);
  }

  private latestDraft(): DraftOutcome | null {
    const steps = this.view?.steps ?? [];
    for (let i = steps.length - 1; i >= 0; i--) {
      const outcome = steps[i]?.outcome;
      if (outcome && outcome.kind === "draft") {
        return outcome;
      }
    }
    return null;
  }

  toggleKeep(slotIndex: number, problemId: string): void {
    if (!this.working) {
      return;
    }
    this.working.toggleKeep(slotIndex, problemId);
    this.render();
  }

  async run(): Promise<void> {
    const view = this.view;
    if (!view || !this.working) {
      return;
    }
    const dv = this.working.toJson();
    await this.guard(async () => {
      await this.client.step(view.session_id, dv);
      this.view = await this.client.getSession(view.session_id);
      this.working = workingFromEntries(this.latestEntries());
    });
  }

  async accept(): Promise<void> {
    const view = this.view;
    if (!view || !this.confirmAccept()) {
      return;
    }
    await this.guard(async () => {
      await this.client.accept(view.session_id);
      this.view = await this.client.getSession(view.session_id);
    });
  }

  async previewRender(kind: "exam" | "solutions"): Promise<void> {
    const view = this.view;
    if (!view) {
      return;
    }
    await this.guard(async () => {
      const content = await this.client.renderText(view.session_id, kind);
      this.preview = { title: `${kind}.tex`, content };
    });
  }

  async previewProblem(problemId: string): Promise<void> {
    await this.guard(async () => {
      const { problem } = await this.client.getProblem(problemId);
      this.preview = {
        title: `${problemId} statement`,
        content: problem.statement ?? "",
      };
    });
  }

  /** Serialize UI actions and funnel API failures into the toast. */
  private async guard(action: () => Promise<void>): Promise<void> {
    if (this.busy) {
      return;
    }
    this.busy = true;
    this.toast = "";
    this.render();
    try {
      await action();
    } catch (error) {
      this.toast =
        error instanceof ApiError
          ? `${error.machineCode}: ${error.message}`
          : String(error);
    } finally {
      this.busy = false;
      this.render();
    }
  }

  private async onClick(event: Event): Promise<void> {
    const target = event.target;
    if (!(target instanceof HTMLElement)) {
      return;
    }
    const keep = target.closest<HTMLElement>(".keep-toggle");
    if (keep && keep.dataset.slot && keep.dataset.problem) {
      this.toggleKeep(Number(keep.dataset.slot), keep.dataset.problem);
      return;
    }
    const problem = target.closest<HTMLElement>(".problem-id");
    if (problem?.textContent) {
      await this.previewProblem(problem.textContent.trim());
      return;
    }
    switch (target.id) {
      case "run":
        return this.run();
      case "accept":
        return this.accept();
      case "preview-exam":
        return this.previewRender("exam");
      case "preview-solutions":
        return this.previewRender("solutions");
    }
  }

  render(): void {
    const view = this.view;
    if (!view) {
      this.root.innerHTML = this.toast ? renderErrorToast(this.toast) : "";
      return;
    }
    const parts: string[] = [];
    if (this.toast) {
      parts.push(renderErrorToast(this.toast));
    }

    const steps = view.steps;
    const last = steps[steps.length - 1];
    const draft = this.latestDraft();
    if (view.status === "accepted" && draft) {
      parts.push(renderAcceptedNote(draft.assignment, view.blueprint.exam_date));
      parts.push(renderMetricsPanel(draft.metrics, view.blueprint));
    } else if (!last) {
      parts.push(renderEmptyState());
    } else {
      if (last.outcome.kind === "infeasible") {
        parts.push(renderFeasibilityBanner(last.outcome.feasibility));
      }
      if (draft && this.working) {
        parts.push(renderSlotCards(draft.slots, this.working));
        parts.push(renderMetricsPanel(draft.metrics, view.blueprint));
      }
      parts.push(
        `<p class="actions">
           <button type="button" id="run"${this.busy ? " disabled" : ""}>Run</button>
           <button type="button" id="accept"${this.busy || !draft ? " disabled" : ""}>Accept</button>
           <button type="button" id="preview-exam"${!draft ? " disabled" : ""}>Preview exam</button>
           <button type="button" id="preview-solutions"${!draft ? " disabled" : ""}>Preview solutions</button>
         </p>`,
      );
    }
    if (this.preview) {
      parts.push(renderPreview(this.preview.title, this.preview.content));
    }
    parts.push(renderTimeline(view));
    this.root.innerHTML = parts.join("\n");
  }
}
