"""Exam assembly from a tagged problem bank.

Drafts are drawn uniformly at random from the set of problem
combinations that hit the blueprint's point target exactly, honoring
per-slot subarea constraints, teacher pins, and a recency exclusion
window. A session records each draw so accepted exams replay bit for
bit from (blueprint, seed, decision vectors).
"""

from .bank import (
    Bank,
    Problem,
    ValidationIssue,
    ValidationReport,
    bank_lock,
    load_bank,
    query_problems,
    record_usage,
    save_bank,
    validate_bank,
)
from .composer import (
    CourseMeta,
    RenderedDoc,
    default_meta,
    escape_text,
    render_exam,
    render_solutions,
)
from .errors import ExamForgeError, InfeasibleDraftError
from .rng import SplitMix64, derive_seed, mix64
from .selector import (
    Blueprint,
    DecisionVector,
    DraftMetrics,
    DraftSampler,
    ExamDraft,
    FeasibilityReport,
    Slot,
    check_feasibility,
    compute_metrics,
    count_completions,
    sample_draft,
)
from .session import Session, SessionStore, Step, new_session, replay

__version__ = "0.1.0"

__all__ = [
    "Bank",
    "Blueprint",
    "CourseMeta",
    "DecisionVector",
    "DraftMetrics",
    "DraftSampler",
    "ExamDraft",
    "ExamForgeError",
    "FeasibilityReport",
    "InfeasibleDraftError",
    "Problem",
    "RenderedDoc",
    "Session",
    "SessionStore",
    "Slot",
    "SplitMix64",
    "Step",
    "ValidationIssue",
    "ValidationReport",
    "bank_lock",
    "check_feasibility",
    "compute_metrics",
    "count_completions",
    "default_meta",
    "derive_seed",
    "escape_text",
    "load_bank",
    "mix64",
    "new_session",
    "query_problems",
    "record_usage",
    "render_exam",
    "render_solutions",
    "replay",
    "sample_draft",
    "save_bank",
    "validate_bank",
]
