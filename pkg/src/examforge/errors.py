"""Domain error hierarchy.

Every error class carries a stable ``machine_code`` (the HTTP API maps
each selector/session failure to exactly one code) and a default
``http_status`` used by the service layer.
"""

from __future__ import annotations

from typing import Any


class ExamForgeError(Exception):
    machine_code = "internal_error"
    http_status = 500

    def __init__(self, message: str, *, details: Any = None):
        super().__init__(message)
        self.details = details


class BankLoadError(ExamForgeError):
    """The bank directory could not be materialized; carries all issues found."""

    machine_code = "bank_load_failed"
    http_status = 500

    def __init__(self, issues: list[str]):
        super().__init__(
            "bank load failed:\n" + "\n".join(f"  - {i}" for i in issues),
            details=issues,
        )
        self.issues = issues


class BankInvalidError(ExamForgeError):
    """A bank with validation errors was passed to a downstream operation."""

    machine_code = "bank_invalid"
    http_status = 500


class UnknownSubareaError(ExamForgeError):
    machine_code = "unknown_subarea"
    http_status = 400


class UnknownProblemError(ExamForgeError):
    machine_code = "unknown_problem"
    http_status = 404


class UsageDateError(ExamForgeError):
    """record_usage would make a problem's usage history non-ascending."""

    machine_code = "non_monotone_usage"
    http_status = 400


class BlueprintError(ExamForgeError):
    machine_code = "invalid_blueprint"
    http_status = 400


class DecisionVectorError(ExamForgeError):
    machine_code = "invalid_decision_vector"
    http_status = 400


class InfeasibleDraftError(ExamForgeError):
    """No duplicate-free completion exists; carries the FeasibilityReport."""

    machine_code = "infeasible"
    http_status = 409

    def __init__(self, message: str, report):
        super().__init__(message, details=report)
        self.report = report


class RestartLimitError(ExamForgeError):
    """Duplicate-rejection resampling exceeded its restart bound."""

    machine_code = "duplicate_restart_limit"
    http_status = 422


class DifficultyBandError(ExamForgeError):
    """Band rejection exceeded its bound; details hold the observed range."""

    machine_code = "difficulty_band_unsatisfied"
    http_status = 422


class SessionExistsError(ExamForgeError):
    """A transcript for this session id already exists."""

    machine_code = "session_exists"
    http_status = 409


class SessionNotFoundError(ExamForgeError):
    machine_code = "session_not_found"
    http_status = 404


class SessionStateError(ExamForgeError):
    """Operation on a session in a terminal state."""

    machine_code = "terminal_state"
    http_status = 409


class NoDraftError(ExamForgeError):
    """Accept/render requested but the session has no successful draft."""

    machine_code = "no_successful_draft"
    http_status = 409


class RenderError(ExamForgeError):
    machine_code = "render_failed"
    http_status = 500


class BadRequestError(ExamForgeError):
    """Malformed request parameter outside the richer domain categories."""

    machine_code = "bad_request"
    http_status = 400


def error_payload(exc: ExamForgeError) -> dict[str, Any]:
    """The one error shape every surface (CLI json, HTTP) emits."""
    return {
        "http_status": exc.http_status,
        "machine_code": exc.machine_code,
        "human_message": str(exc),
        "details": exc.details,
    }
