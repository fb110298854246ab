/**
 * Wire types for the examforge HTTP API.
 *
 * These mirror the server's JSON exactly; the UI never reshapes or
 * recomputes what the API reports. 64-bit values (seeds, completion
 * counts) travel as decimal strings because they can exceed the range
 * a JS number represents exactly.
 */

export type DvEntry = "R" | { M: string };

export interface BlueprintSlot {
  slot_index: number;
  subarea: string;
}

export interface Blueprint {
  slots: BlueprintSlot[];
  target_points: number;
  exam_date: string;
  recency_window_days: number;
  difficulty_band?: { min: number; max: number } | null;
}

export interface SlotRow {
  slot_index: number;
  subarea: string;
  problem_id: string;
  points: number;
  solo_level: number;
  difficulty: number;
  ilo_refs: string[];
  pinned: boolean;
}

export interface Metrics {
  total_points: number;
  weighted_difficulty: number;
  solo_histogram: number[];
  ilo_coverage: string[];
}

export interface Feasibility {
  feasible: boolean;
  completion_count: string;
  achievable_point_range: { min: number; max: number } | null;
  per_slot_candidate_counts: number[];
  verdict: string;
}

export interface DraftOutcome {
  kind: "draft";
  assignment: string[];
  slots: SlotRow[];
  metrics: Metrics;
  seed_used: string;
}

export interface InfeasibleOutcome {
  kind: "infeasible";
  feasibility: Feasibility;
}

export type StepOutcome = DraftOutcome | InfeasibleOutcome;

export interface StepPayload {
  session_id: string;
  status: string;
  step_number: number;
  decision_vector: DvEntry[];
  seed: string;
  outcome: StepOutcome;
}

export interface SessionCreated {
  session_id: string;
  status: string;
  base_seed: string;
  bank_ref: string;
  blueprint: Blueprint;
}

export interface SessionView extends SessionCreated {
  steps: Array<Omit<StepPayload, "session_id" | "status">>;
}

export interface AcceptResult {
  session_id: string;
  status: string;
  assignment: string[];
  exam_date: string;
}

export interface ProblemRow {
  id: string;
  subarea: string;
  points: number;
  ilo_refs: string[];
  solo_level: number;
  difficulty: number;
  usage_dates: string[];
  statement?: string;
  solution?: string;
}

export interface ProblemList {
  bank_ref: string;
  subareas: Record<string, string>;
  problems: ProblemRow[];
}

export interface RenderedDoc {
  kind: "exam" | "solutions";
  content: string;
  warnings: string[];
}

export interface ErrorEnvelope {
  error: {
    http_status: number;
    machine_code: string;
    human_message: string;
    details: Record<string, unknown>;
  };
}
