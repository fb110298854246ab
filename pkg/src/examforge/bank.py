"""Problem-bank data model, on-disk format, validation and usage history.

On disk a bank is a directory holding ``bank.json`` (the manifest, UTF-8,
canonical key order) plus per-problem ``.tex`` fragment files referenced
by relative path.  Fragment content is opaque to the toolkit: files are
checked for existence and materialized as text, never parsed as LaTeX.

Bank values are immutable snapshots after load; mutating operations
(``record_usage``) return new values.  Persisting is a separate explicit
``save_bank`` step that takes an advisory lock on the bank directory.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import date
from functools import cached_property
from pathlib import Path, PurePosixPath
from typing import Any, Iterable, Iterator

from .errors import (
    BankInvalidError,
    BankLoadError,
    ExamForgeError,
    UnknownProblemError,
    UnknownSubareaError,
    UsageDateError,
)

SCHEMA_VERSION = 1
LOCK_FILENAME = ".examforge.lock"

PROBLEM_KEYS = (
    "id",
    "subarea",
    "points",
    "ilo_refs",
    "solo_level",
    "difficulty",
    "statement_path",
    "solution_path",
    "usage_dates",
)
TOP_KEYS = ("schema_version", "subareas", "problems")


@dataclass(frozen=True)
class Problem:
    """One bank item: LaTeX fragment references plus selection metadata."""

    id: str
    subarea: str
    points: int
    ilo_refs: tuple[str, ...]
    solo_level: int
    difficulty: float
    statement_path: str | None = None
    solution_path: str | None = None
    usage_dates: tuple[date, ...] = ()
    statement_text: str | None = None
    solution_text: str | None = None

    def last_used(self) -> date | None:
        return self.usage_dates[-1] if self.usage_dates else None

    def used_within(self, exam_date: date, window_days: int) -> bool:
        """True if some usage date falls in the window before exam_date.

        The window is [exam_date - window_days, exam_date]: a delta of 0
        days (same-day usage) counts as recent, a delta of exactly
        window_days does not, and window 0 disables the check entirely.
        Usage dates after exam_date are outside the window by definition.
        """
        return any(
            0 <= (exam_date - d).days < window_days for d in self.usage_dates
        )


@dataclass(frozen=True)
class ValidationIssue:
    rule_code: str
    message: str
    problem_id: str | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"rule_code": self.rule_code, "message": self.message}
        if self.problem_id is not None:
            out["problem_id"] = self.problem_id
        return out


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ValidationIssue, ...] = ()
    warnings: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict[str, Any]:
        return {
            "errors": [e.to_json() for e in self.errors],
            "warnings": [w.to_json() for w in self.warnings],
        }


@dataclass
class Bank:
    """Immutable-by-convention snapshot of the problem bank.

    ``problems`` is always sorted by id and ``subareas`` by code, so equal
    bank values have equal canonical serializations.
    """

    subareas: dict[str, str]
    problems: tuple[Problem, ...]
    schema_version: int = SCHEMA_VERSION
    root: Path | None = None
    load_warnings: tuple[ValidationIssue, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        self.subareas = dict(sorted(self.subareas.items()))
        self.problems = tuple(sorted(self.problems, key=lambda p: p.id))

    @cached_property
    def problems_by_id(self) -> dict[str, Problem]:
        return {p.id: p for p in self.problems}

    @cached_property
    def by_subarea(self) -> dict[str, tuple[Problem, ...]]:
        grouped: dict[str, list[Problem]] = {code: [] for code in self.subareas}
        for p in self.problems:
            grouped.setdefault(p.subarea, []).append(p)
        return {code: tuple(ps) for code, ps in grouped.items()}

    @cached_property
    def validation(self) -> ValidationReport:
        return validate_bank(self)

    def problem(self, problem_id: str) -> Problem:
        try:
            return self.problems_by_id[problem_id]
        except KeyError:
            raise UnknownProblemError(f"no problem with id {problem_id!r}") from None

    def digest(self) -> str:
        """SHA-256 of the canonical manifest; identifies the bank snapshot."""
        return hashlib.sha256(manifest_bytes(self)).hexdigest()


def require_valid(bank: Bank) -> None:
    """Refuse banks with validation errors (all downstream operations)."""
    report = bank.validation
    if not report.ok:
        raise BankInvalidError(
            "bank has validation errors: "
            + "; ".join(e.message for e in report.errors),
            details=report,
        )


# ---------------- loading ----------------


def _parse_iso_date(raw: Any, where: str, issues: list[str]) -> date | None:
    if not isinstance(raw, str):
        issues.append(f"{where}: date must be a YYYY-MM-DD string, got {raw!r}")
        return None
    try:
        return date.fromisoformat(raw)
    except ValueError:
        issues.append(f"{where}: invalid ISO date {raw!r}")
        return None


def _fragment_path_ok(raw: str, where: str, issues: list[str]) -> bool:
    pure = PurePosixPath(raw)
    if pure.is_absolute() or ".." in pure.parts:
        issues.append(f"{where}: fragment path must be relative within the bank, got {raw!r}")
        return False
    return True


def _typecheck(value: Any, types: type | tuple[type, ...], where: str, issues: list[str]) -> bool:
    # bool is an int subclass; never acceptable where a number is expected
    if isinstance(value, bool) or not isinstance(value, types):
        issues.append(f"{where}: wrong type {type(value).__name__}")
        return False
    return True


def load_bank(path: str | Path) -> Bank:
    """Load and materialize a bank directory.

    Structural failures (missing/malformed manifest, unknown schema
    version, missing keys, wrong types, duplicate ids, dangling fragment
    paths) raise BankLoadError listing every issue found with its
    location.  Value-range invariants are left to ``validate_bank`` so a
    structurally sound but invalid bank can still be inspected.
    """
    root = Path(path)
    if root.is_file() and root.name == "bank.json":
        root = root.parent
    manifest = root / "bank.json"
    if not manifest.is_file():
        raise BankLoadError([f"{manifest}: no such file"])
    try:
        raw = manifest.read_text(encoding="utf-8")
    except OSError as exc:
        raise BankLoadError([f"{manifest}: unreadable ({exc})"]) from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BankLoadError([f"{manifest}: malformed JSON ({exc})"]) from exc
    if not isinstance(doc, dict):
        raise BankLoadError([f"{manifest}: top level must be an object"])

    issues: list[str] = []
    warnings: list[ValidationIssue] = []

    for key in TOP_KEYS:
        if key not in doc:
            issues.append(f"{manifest}: missing required key {key!r}")
    for key in doc:
        if key not in TOP_KEYS:
            warnings.append(
                ValidationIssue("unknown_key", f"bank.json: unknown key {key!r}")
            )
    if issues:
        raise BankLoadError(issues)

    version = doc["schema_version"]
    if not isinstance(version, int) or isinstance(version, bool) or version != SCHEMA_VERSION:
        raise BankLoadError(
            [f"{manifest}: unknown schema_version {version!r} (supported: {SCHEMA_VERSION})"]
        )

    subareas_raw = doc["subareas"]
    if not isinstance(subareas_raw, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in subareas_raw.items()
    ):
        raise BankLoadError([f"{manifest}: subareas must map code strings to title strings"])

    problems_raw = doc["problems"]
    if not isinstance(problems_raw, list):
        raise BankLoadError([f"{manifest}: problems must be an array"])

    problems: list[Problem] = []
    seen_ids: set[str] = set()
    for idx, entry in enumerate(problems_raw):
        where = f"problems[{idx}]"
        if not isinstance(entry, dict):
            issues.append(f"{where}: must be an object")
            continue
        missing = [k for k in PROBLEM_KEYS if k not in entry]
        if missing:
            issues.append(f"{where}: missing required keys {missing}")
            continue
        for key in entry:
            if key not in PROBLEM_KEYS:
                warnings.append(
                    ValidationIssue(
                        "unknown_key",
                        f"{where}: unknown key {key!r}",
                        problem_id=entry.get("id") if isinstance(entry.get("id"), str) else None,
                    )
                )
        ok = True
        ok &= _typecheck(entry["id"], str, f"{where}.id", issues)
        ok &= _typecheck(entry["subarea"], str, f"{where}.subarea", issues)
        ok &= _typecheck(entry["points"], int, f"{where}.points", issues)
        ok &= _typecheck(entry["solo_level"], int, f"{where}.solo_level", issues)
        ok &= _typecheck(entry["difficulty"], (int, float), f"{where}.difficulty", issues)
        ok &= _typecheck(entry["statement_path"], str, f"{where}.statement_path", issues)
        ok &= _typecheck(entry["solution_path"], str, f"{where}.solution_path", issues)
        if not isinstance(entry["ilo_refs"], list) or not all(
            isinstance(x, str) for x in entry["ilo_refs"]
        ):
            issues.append(f"{where}.ilo_refs: must be an array of strings")
            ok = False
        if not isinstance(entry["usage_dates"], list):
            issues.append(f"{where}.usage_dates: must be an array of dates")
            ok = False
        if not ok:
            continue

        pid = entry["id"]
        where = f"problem {pid!r}"
        if pid in seen_ids:
            issues.append(f"{where}: duplicate id")
            continue
        seen_ids.add(pid)

        dates: list[date] = []
        for raw_d in entry["usage_dates"]:
            parsed = _parse_iso_date(raw_d, f"{where}.usage_dates", issues)
            if parsed is not None:
                dates.append(parsed)

        texts: dict[str, str | None] = {}
        for kind in ("statement", "solution"):
            rel = entry[f"{kind}_path"]
            texts[kind] = None
            if not _fragment_path_ok(rel, f"{where}.{kind}_path", issues):
                continue
            frag = root / rel
            if not frag.is_file():
                issues.append(f"{where}: dangling fragment path {rel!r}")
                continue
            texts[kind] = frag.read_text(encoding="utf-8")

        problems.append(
            Problem(
                id=pid,
                subarea=entry["subarea"],
                points=entry["points"],
                ilo_refs=tuple(entry["ilo_refs"]),
                solo_level=entry["solo_level"],
                difficulty=float(entry["difficulty"]),
                statement_path=entry["statement_path"],
                solution_path=entry["solution_path"],
                usage_dates=tuple(dates),
                statement_text=texts["statement"],
                solution_text=texts["solution"],
            )
        )

    if issues:
        raise BankLoadError(issues)
    return Bank(
        subareas=subareas_raw,
        problems=tuple(problems),
        schema_version=version,
        root=root,
        load_warnings=tuple(warnings),
    )


# ---------------- validation ----------------


def validate_bank(bank: Bank) -> ValidationReport:
    """Check every Problem/Bank invariant; violations are report entries."""
    errors: list[ValidationIssue] = []
    warnings = list(bank.load_warnings)

    seen: set[str] = set()
    for p in bank.problems:
        if not p.id:
            errors.append(ValidationIssue("id_missing", "problem with empty id"))
        if p.id in seen:
            errors.append(
                ValidationIssue("duplicate_id", f"duplicate id {p.id!r}", problem_id=p.id)
            )
        seen.add(p.id)
        if p.points < 1:
            errors.append(
                ValidationIssue(
                    "points_positive",
                    f"points must be >= 1, got {p.points}",
                    problem_id=p.id,
                )
            )
        if not 0.0 <= p.difficulty <= 1.0:
            errors.append(
                ValidationIssue(
                    "difficulty_range",
                    f"difficulty must be in [0, 1], got {p.difficulty}",
                    problem_id=p.id,
                )
            )
        if not 1 <= p.solo_level <= 5:
            errors.append(
                ValidationIssue(
                    "solo_range",
                    f"solo_level must be in 1..5, got {p.solo_level}",
                    problem_id=p.id,
                )
            )
        if any(b <= a for a, b in zip(p.usage_dates, p.usage_dates[1:])):
            errors.append(
                ValidationIssue(
                    "usage_dates_order",
                    "usage_dates must be strictly ascending",
                    problem_id=p.id,
                )
            )
        if p.subarea not in bank.subareas:
            errors.append(
                ValidationIssue(
                    "unknown_subarea",
                    f"subarea {p.subarea!r} is not registered",
                    problem_id=p.id,
                )
            )
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


# ---------------- querying ----------------


def query_problems(
    bank: Bank,
    *,
    subarea: str | None = None,
    min_points: int | None = None,
    max_points: int | None = None,
    ilo: str | None = None,
    solo_level: int | None = None,
    unused_since: date | None = None,
) -> list[Problem]:
    """All problems matching every supplied criterion, ordered by id."""
    require_valid(bank)
    if subarea is not None and subarea not in bank.subareas:
        raise UnknownSubareaError(f"unknown subarea {subarea!r}")
    out = []
    for p in bank.problems:  # already id-sorted
        if subarea is not None and p.subarea != subarea:
            continue
        if min_points is not None and p.points < min_points:
            continue
        if max_points is not None and p.points > max_points:
            continue
        if ilo is not None and ilo not in p.ilo_refs:
            continue
        if solo_level is not None and p.solo_level != solo_level:
            continue
        if unused_since is not None and any(d >= unused_since for d in p.usage_dates):
            continue
        out.append(p)
    return out


# ---------------- usage history ----------------


def record_usage(bank: Bank, problem_ids: Iterable[str], exam_date: date) -> Bank:
    """Append exam_date to each listed problem's usage history.

    Returns a new Bank value; persisting is a separate save_bank step.
    """
    ids = list(problem_ids)
    for pid in ids:
        p = bank.problem(pid)
        last = p.last_used()
        if last is not None and exam_date <= last:
            raise UsageDateError(
                f"problem {pid!r}: exam date {exam_date.isoformat()} is not after "
                f"last usage {last.isoformat()}"
            )
    marked = set(ids)
    updated = tuple(
        replace(p, usage_dates=p.usage_dates + (exam_date,)) if p.id in marked else p
        for p in bank.problems
    )
    return Bank(
        subareas=bank.subareas,
        problems=updated,
        schema_version=bank.schema_version,
        root=bank.root,
        load_warnings=bank.load_warnings,
    )


# ---------------- persistence ----------------


def manifest_dict(bank: Bank) -> dict[str, Any]:
    """Canonical manifest structure: fixed key order, id-sorted problems."""
    problems = []
    for p in bank.problems:
        if p.statement_path is None or p.solution_path is None:
            raise ExamForgeError(
                f"problem {p.id!r} has no fragment paths; assign statement_path/"
                "solution_path before serializing the bank"
            )
        problems.append(
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
    return {
        "schema_version": bank.schema_version,
        "subareas": dict(sorted(bank.subareas.items())),
        "problems": problems,
    }


def manifest_bytes(bank: Bank) -> bytes:
    text = json.dumps(manifest_dict(bank), ensure_ascii=False, indent=2)
    return (text + "\n").encode("utf-8")


@contextmanager
def bank_lock(bank_dir: str | Path, timeout: float = 10.0) -> Iterator[None]:
    """Advisory exclusive lock on the bank directory (flock on a lockfile)."""
    bank_dir = Path(bank_dir)
    bank_dir.mkdir(parents=True, exist_ok=True)
    fd = os.open(bank_dir / LOCK_FILENAME, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        deadline = time.monotonic() + timeout
        while True:
            try:
                fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
                break
            except BlockingIOError:
                if time.monotonic() >= deadline:
                    raise TimeoutError(
                        f"could not lock bank directory {bank_dir} within {timeout}s"
                    ) from None
                time.sleep(0.05)
        yield
    finally:
        fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


def save_bank(bank: Bank, path: str | Path | None = None) -> Path:
    """Write the canonical manifest (and any missing fragment files).

    Existing fragment files are never overwritten: they are the
    hand-edited source of truth.  Saving into a fresh directory therefore
    exports the full bank; saving in place updates metadata only.

    The manifest swap itself is atomic (``os.replace``).  Callers doing a
    read-modify-write cycle must hold ``bank_lock`` around the whole
    cycle; this function does not take it, so it can run under one.
    """
    if path is None:
        path = bank.root
    if path is None:
        raise ExamForgeError("save_bank needs a target path for a bank without a root")
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    payload = manifest_bytes(bank)  # validates fragment paths up front
    for p in bank.problems:
        for rel, text in (
            (p.statement_path, p.statement_text),
            (p.solution_path, p.solution_text),
        ):
            target = root / rel
            if target.exists():
                continue
            if text is None:
                raise ExamForgeError(
                    f"problem {p.id!r}: fragment {rel!r} does not exist at the "
                    "destination and no materialized text is available"
                )
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
    tmp = root / "bank.json.tmp"
    tmp.write_bytes(payload)
    os.replace(tmp, root / "bank.json")
    return root
