"""Shared JSON encodings for blueprints, decision vectors, drafts and reports.

One place defines the wire format used by session transcripts, the CLI's
--format json output and the HTTP API, so the three surfaces cannot
drift.  Conventions:

* dates are ISO-8601 ``YYYY-MM-DD`` strings,
* 64-bit seeds are decimal *strings* (JavaScript JSON parsing corrupts
  integers above 2^53, and the web UI consumes these payloads),
* completion counts are decimal strings for the same reason,
* a decision vector is an array of ``"R"`` / ``{"M": "<problem-id>"}``.
"""

from __future__ import annotations

from datetime import date
from typing import Any, Mapping, Sequence

from .bank import Bank
from .errors import BadRequestError, BlueprintError, DecisionVectorError
from .rng import MASK64
from .selector import (
    Blueprint,
    DecisionVector,
    DraftMetrics,
    ExamDraft,
    FeasibilityReport,
    Slot,
)


def seed_to_json(seed: int) -> str:
    return str(seed)


def seed_from_json(raw: Any, what: str = "seed") -> int:
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        raise BadRequestError(
            f"{what} must be an integer or decimal string, got {raw!r}"
        )
    try:
        value = int(raw)
    except ValueError:
        raise BadRequestError(
            f"{what} must be a decimal integer string, got {raw!r}"
        ) from None
    if not 0 <= value <= MASK64:
        raise BadRequestError(f"{what} must fit in 64 bits, got {value}")
    return value


def _parse_date(raw: Any, what: str) -> date:
    if not isinstance(raw, str):
        raise BlueprintError(f"{what} must be a YYYY-MM-DD string, got {raw!r}")
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise BlueprintError(f"{what}: invalid date {raw!r}") from None


# ---------------- blueprint ----------------


def blueprint_to_json(bp: Blueprint) -> dict[str, Any]:
    out: dict[str, Any] = {
        "slots": [{"slot_index": s.index, "subarea": s.subarea} for s in bp.slots],
        "target_points": bp.target_points,
        "exam_date": bp.exam_date.isoformat(),
        "recency_window_days": bp.recency_window_days,
    }
    if bp.difficulty_band is not None:
        out["difficulty_band"] = {
            "min": bp.difficulty_band[0],
            "max": bp.difficulty_band[1],
        }
    return out


def blueprint_from_json(doc: Any) -> Blueprint:
    if not isinstance(doc, Mapping):
        raise BlueprintError(f"blueprint must be an object, got {type(doc).__name__}")
    unknown = set(doc) - {
        "slots",
        "target_points",
        "exam_date",
        "recency_window_days",
        "difficulty_band",
    }
    if unknown:
        raise BlueprintError(f"blueprint has unknown keys {sorted(unknown)}")
    slots_raw = doc.get("slots")
    if not isinstance(slots_raw, Sequence) or isinstance(slots_raw, (str, bytes)):
        raise BlueprintError("blueprint.slots must be an array")
    slots = []
    for i, entry in enumerate(slots_raw):
        if not isinstance(entry, Mapping):
            raise BlueprintError(f"slots[{i}] must be an object")
        idx = entry.get("slot_index")
        subarea = entry.get("subarea")
        if isinstance(idx, bool) or not isinstance(idx, int):
            raise BlueprintError(f"slots[{i}].slot_index must be an integer")
        if not isinstance(subarea, str):
            raise BlueprintError(f"slots[{i}].subarea must be a string")
        slots.append(Slot(index=idx, subarea=subarea))
    target = doc.get("target_points")
    if isinstance(target, bool) or not isinstance(target, int):
        raise BlueprintError("blueprint.target_points must be an integer")
    window = doc.get("recency_window_days", 730)
    if isinstance(window, bool) or not isinstance(window, int):
        raise BlueprintError("blueprint.recency_window_days must be an integer")
    band_raw = doc.get("difficulty_band")
    band = None
    if band_raw is not None:
        if (
            not isinstance(band_raw, Mapping)
            or not isinstance(band_raw.get("min"), (int, float))
            or not isinstance(band_raw.get("max"), (int, float))
            or isinstance(band_raw.get("min"), bool)
            or isinstance(band_raw.get("max"), bool)
        ):
            raise BlueprintError(
                "blueprint.difficulty_band must be {\"min\": number, \"max\": number}"
            )
        band = (float(band_raw["min"]), float(band_raw["max"]))
    return Blueprint(
        slots=tuple(slots),
        target_points=target,
        exam_date=_parse_date(doc.get("exam_date"), "blueprint.exam_date"),
        recency_window_days=window,
        difficulty_band=band,
    )


# ---------------- decision vector ----------------


def dv_to_json(dv: DecisionVector) -> list[Any]:
    return ["R" if pid is None else {"M": pid} for pid in dv.entries]


def dv_from_json(doc: Any) -> DecisionVector:
    if not isinstance(doc, Sequence) or isinstance(doc, (str, bytes)):
        raise DecisionVectorError(
            "decision vector must be an array of \"R\" / {\"M\": id} entries"
        )
    if not doc:
        raise DecisionVectorError("decision vector must have at least one entry")
    entries: list[str | None] = []
    for i, entry in enumerate(doc):
        if entry == "R":
            entries.append(None)
        elif (
            isinstance(entry, Mapping)
            and set(entry) == {"M"}
            and isinstance(entry["M"], str)
        ):
            entries.append(entry["M"])
        else:
            raise DecisionVectorError(
                f"decision vector entry {i}: expected \"R\" or {{\"M\": \"<id>\"}}, "
                f"got {entry!r}"
            )
    return DecisionVector(tuple(entries))


# ---------------- metrics / drafts / feasibility ----------------


def metrics_to_json(metrics: DraftMetrics) -> dict[str, Any]:
    return {
        "total_points": metrics.total_points,
        "weighted_difficulty": metrics.weighted_difficulty,
        "solo_histogram": list(metrics.solo_histogram),
        "ilo_coverage": list(metrics.ilo_coverage),
    }


def draft_to_json(
    bank: Bank, blueprint: Blueprint, dv: DecisionVector, draft: ExamDraft
) -> dict[str, Any]:
    rows = []
    for slot, pid, entry in zip(blueprint.slots, draft.assignment, dv.entries):
        p = bank.problem(pid)
        rows.append(
            {
                "slot_index": slot.index,
                "subarea": slot.subarea,
                "problem_id": pid,
                "points": p.points,
                "solo_level": p.solo_level,
                "difficulty": p.difficulty,
                "ilo_refs": list(p.ilo_refs),
                "pinned": entry is not None,
            }
        )
    return {
        "assignment": list(draft.assignment),
        "slots": rows,
        "metrics": metrics_to_json(draft.metrics),
        "seed_used": seed_to_json(draft.seed_used),
    }


def step_to_json(bank: Bank, blueprint: Blueprint, step) -> dict[str, Any]:
    """One step as CLI and HTTP emit it; outcome.kind is draft|infeasible."""
    if step.draft is not None:
        outcome: dict[str, Any] = {"kind": "draft"}
        outcome.update(draft_to_json(bank, blueprint, step.decision_vector, step.draft))
    else:
        outcome = {
            "kind": "infeasible",
            "feasibility": feasibility_to_json(step.feasibility),
        }
    return {
        "step_number": step.step_number,
        "decision_vector": dv_to_json(step.decision_vector),
        "seed": seed_to_json(step.seed),
        "outcome": outcome,
    }


def feasibility_to_json(report: FeasibilityReport) -> dict[str, Any]:
    rng = report.achievable_point_range
    return {
        "feasible": report.feasible,
        "completion_count": str(report.completion_count),
        "achievable_point_range": (
            None if rng is None else {"min": rng[0], "max": rng[1]}
        ),
        "per_slot_candidate_counts": list(report.per_slot_candidate_counts),
        "verdict": report.verdict,
    }


def feasibility_from_json(doc: Mapping[str, Any]) -> FeasibilityReport:
    rng = doc.get("achievable_point_range")
    return FeasibilityReport(
        feasible=bool(doc["feasible"]),
        completion_count=int(doc["completion_count"]),
        achievable_point_range=None if rng is None else (rng["min"], rng["max"]),
        per_slot_candidate_counts=tuple(doc["per_slot_candidate_counts"]),
        verdict=doc.get("verdict", "exact"),
    )


def problem_to_json(problem, include_body: bool = False) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": problem.id,
        "subarea": problem.subarea,
        "points": problem.points,
        "ilo_refs": list(problem.ilo_refs),
        "solo_level": problem.solo_level,
        "difficulty": problem.difficulty,
        "usage_dates": [d.isoformat() for d in problem.usage_dates],
    }
    if include_body:
        out["statement"] = problem.statement_text
        out["solution"] = problem.solution_text
    return out
