"""Shared fixtures: in-memory banks, on-disk banks, and converters."""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import pytest

from examforge.bank import Bank, Problem
from examforge.selector import Blueprint

from .oracles import OracleInstance

EXAM_DATE = date(2026, 6, 1)


def make_problem(pid: str, subarea: str, points: int, **kw) -> Problem:
    defaults = dict(
        ilo_refs=("ILO1",),
        solo_level=3,
        difficulty=0.5,
        statement_path=f"problems/{pid}.tex",
        solution_path=f"problems/{pid}-sol.tex",
        usage_dates=(),
        statement_text=f"Statement for {pid}.\n",
        solution_text=f"Solution for {pid}.\n",
    )
    defaults.update(kw)
    return Problem(id=pid, subarea=subarea, points=points, **defaults)


def make_bank(problems, subareas=None) -> Bank:
    if subareas is None:
        subareas = {p.subarea: p.subarea.title() for p in problems}
    return Bank(subareas=dict(subareas), problems=tuple(problems))


def bank_from_instance(inst: OracleInstance) -> Bank:
    problems = [
        make_problem(
            p.id,
            p.subarea,
            p.points,
            difficulty=p.difficulty,
            solo_level=p.solo_level,
            ilo_refs=tuple(p.ilo_refs),
            usage_dates=tuple(p.usage_dates),
        )
        for p in inst.problems
    ]
    subareas = {code: f"Subarea {code}" for code in inst.slot_subareas}
    for p in inst.problems:
        subareas.setdefault(p.subarea, f"Subarea {p.subarea}")
    return make_bank(problems, subareas)


def blueprint_from_instance(inst: OracleInstance) -> Blueprint:
    return Blueprint.from_subareas(
        inst.slot_subareas,
        inst.target_points,
        inst.exam_date,
        recency_window_days=inst.recency_window_days,
    )


def write_bank_dir(root: Path, bank: Bank) -> Path:
    """Materialize an in-memory bank as a loadable directory."""
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": bank.schema_version,
        "subareas": dict(bank.subareas),
        "problems": [],
    }
    for p in bank.problems:
        (root / p.statement_path).parent.mkdir(parents=True, exist_ok=True)
        (root / p.statement_path).write_text(p.statement_text, encoding="utf-8")
        (root / p.solution_path).write_text(p.solution_text, encoding="utf-8")
        manifest["problems"].append(
            {
                "id": p.id,
                "subarea": p.subarea,
                "points": p.points,
                "ilo_refs": list(p.ilo_refs),
                "solo_level": p.solo_level,
                "difficulty": p.difficulty,
                "statement_path": p.statement_path,
                "solution_path": p.solution_path,
                "usage_dates": [d.isoformat() for d in p.usage_dates],
            }
        )
    (root / "bank.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return root


# Two subareas, two problems each, one 15-point target: exactly two
# completions (a1+b2, a2+b1), both with weighted difficulty 0.6.
TOY_SPEC = [
    ("a1", "LIN", 5, 0.4),
    ("a2", "LIN", 10, 0.7),
    ("b1", "FREQ", 5, 0.4),
    ("b2", "FREQ", 10, 0.7),
]


@pytest.fixture
def toy_bank() -> Bank:
    return make_bank(
        [make_problem(pid, sub, pts, difficulty=d) for pid, sub, pts, d in TOY_SPEC],
        subareas={"LIN": "Linear systems", "FREQ": "Frequency response"},
    )


@pytest.fixture
def toy_blueprint() -> Blueprint:
    return Blueprint.from_subareas(["LIN", "FREQ"], 15, EXAM_DATE)


@pytest.fixture
def toy_bank_dir(tmp_path, toy_bank) -> Path:
    return write_bank_dir(tmp_path / "bank", toy_bank)


# Acceptance-check reporting: test_acceptance.py records one line per
# criterion; they are echoed after the run regardless of capture settings.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
