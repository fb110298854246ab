/**
 * HTML-string views. Pure functions from API payloads to markup so the
 * test suite can assert on them without a browser.
 *
 * Every number and id shown comes verbatim from the payload: the UI
 * displays what the service computed and never re-derives totals,
 * difficulties, or feasibility verdicts on its own.
 */

import type {
  Blueprint,
  DvEntry,
  Feasibility,
  Metrics,
  SessionView,
  SlotRow,
  StepOutcome,
} from "./types.js";
import { WorkingVector } from "./dv.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function dvLabel(entries: DvEntry[]): string {
  return `[${entries.map((e) => (e === "R" ? "R" : "M")).join(" ")}]`;
}

/** One card per slot; the Keep button reflects the working vector. */
export function renderSlotCards(slots: SlotRow[], working: WorkingVector): string {
  const cards = slots
    .map((row) => {
      const kept = working.isKept(row.slot_index);
      return `
        <article class="slot-card${kept ? " kept" : ""}" data-slot="${row.slot_index}">
          <header>
            <span class="slot-no">Slot ${row.slot_index}</span>
            <span class="subarea">${escapeHtml(row.subarea)}</span>
          </header>
          <h3 class="problem-id">${escapeHtml(row.problem_id)}</h3>
          <dl>
            <dt>Points</dt><dd>${row.points}</dd>
            <dt>SOLO</dt><dd>${row.solo_level}</dd>
            <dt>Difficulty</dt><dd>${row.difficulty}</dd>
            <dt>ILOs</dt><dd>${row.ilo_refs.map(escapeHtml).join(", ")}</dd>
          </dl>
          <button type="button" class="keep-toggle" data-slot="${row.slot_index}"
                  data-problem="${escapeHtml(row.problem_id)}">
            ${kept ? "Kept (click to release)" : "Keep for next run"}
          </button>
        </article>`;
    })
    .join("");
  return `<div class="slot-cards">${cards}</div>`;
}

export function renderMetricsPanel(metrics: Metrics, blueprint: Blueprint): string {
  const band = blueprint.difficulty_band;
  const bandNote = band
    ? `<span class="band">band ${band.min}&ndash;${band.max}</span>`
    : "";
  const bars = metrics.solo_histogram
    .map(
      (count, i) => `
        <div class="solo-bar" data-level="${i + 1}">
          <span class="solo-label">SOLO ${i + 1}</span>
          <span class="solo-count">${count}</span>
        </div>`,
    )
    .join("");
  const ilos = metrics.ilo_coverage
    .map((ilo) => `<li>${escapeHtml(ilo)}</li>`)
    .join("");
  return `
    <section class="metrics-panel">
      <div class="metric points">
        <span class="value">${metrics.total_points}</span>
        <span class="target">/ ${blueprint.target_points} points</span>
      </div>
      <div class="metric difficulty">
        <span class="value">${metrics.weighted_difficulty}</span>
        <span class="caption">weighted difficulty</span>
        ${bandNote}
      </div>
      <div class="metric solo-histogram">${bars}</div>
      <ul class="ilo-coverage">${ilos}</ul>
    </section>`;
}

export function renderFeasibilityBanner(feasibility: Feasibility): string {
  const range = feasibility.achievable_point_range;
  const rangeNote = range
    ? `achievable totals ${range.min}&ndash;${range.max}`
    : "no complete assignment exists for these slots";
  const counts = feasibility.per_slot_candidate_counts
    .map((n, i) => `<li>slot ${i + 1}: ${n} candidates</li>`)
    .join("");
  return `
    <aside class="feasibility-banner" role="alert">
      <strong>No draft for this target.</strong>
      <p>${rangeNote}; ${escapeHtml(feasibility.completion_count)} exact completions.</p>
      <ul class="candidate-counts">${counts}</ul>
    </aside>`;
}

function outcomeSummary(outcome: StepOutcome): string {
  if (outcome.kind === "draft") {
    return `${outcome.metrics.total_points} points: ${outcome.assignment
      .map(escapeHtml)
      .join(", ")}`;
  }
  return "infeasible";
}

/** The session history, oldest first, the way the transcript reads. */
export function renderTimeline(view: SessionView): string {
  const items = view.steps
    .map(
      (step) => `
        <li class="timeline-step${step.outcome.kind === "infeasible" ? " infeasible" : ""}"
            data-step="${step.step_number}">
          <span class="step-no">Step ${step.step_number}</span>
          <code class="dv">${dvLabel(step.decision_vector)}</code>
          <span class="outcome">${outcomeSummary(step.outcome)}</span>
        </li>`,
    )
    .join("");
  return `
    <section class="timeline">
      <h3>Session ${escapeHtml(view.session_id)} (${escapeHtml(view.status)})</h3>
      <ol>${items}</ol>
    </section>`;
}

export function renderEmptyState(): string {
  return `
    <section class="empty-state">
      <p>No draft yet.</p>
      <button type="button" id="run">Run</button>
    </section>`;
}

/** LaTeX is shown as source text, never interpreted. */
export function renderPreview(title: string, content: string): string {
  return `
    <section class="preview">
      <h3>${escapeHtml(title)}</h3>
      <pre class="latex-source">${escapeHtml(content)}</pre>
    </section>`;
}

export function renderErrorToast(message: string): string {
  return `<div class="toast error" role="alert">${escapeHtml(message)}</div>`;
}

export function renderAcceptedNote(assignment: string[], examDate: string): string {
  return `
    <section class="accepted-note">
      <p>Accepted for ${escapeHtml(examDate)}: ${assignment.map(escapeHtml).join(", ")}.</p>
      <p>
        <button type="button" id="preview-exam">Preview exam .tex</button>
        <button type="button" id="preview-solutions">Preview solutions .tex</button>
      </p>
    </section>`;
}
