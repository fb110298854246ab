"""Stepwise alignment sessions: decision-vector history, reruns, acceptance.

A session is a replayable transcript: the blueprint, a 64-bit base seed
and the ordered list of decision vectors fully determine every draft.
Step k samples with ``derive_seed(base_seed, k)``, so rerunning with an
unchanged decision vector still explores a fresh draft while the whole
loop stays reproducible.

Transcripts persist as append-only JSON-lines files, one record per event
(``new``, ``step``, ``accept``, ``abandon``).  Step records additionally
cache the outcome (assignment + seed, or the feasibility report): after
an accept has updated the bank's usage history, recomputing old drafts
against the mutated bank would diverge, so reloading trusts the cache.
``replay`` deliberately ignores the cache and recomputes everything; the
determinism tests compare the two.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

from . import wire
from .bank import Bank, require_valid
from .errors import (
    ExamForgeError,
    InfeasibleDraftError,
    NoDraftError,
    SessionExistsError,
    SessionNotFoundError,
    SessionStateError,
)
from .rng import derive_seed, mix64
from .selector import (
    DecisionVector,
    ExamDraft,
    FeasibilityReport,
    Blueprint,
    compute_metrics,
    sample_draft,
)

ACTIVE = "active"
ACCEPTED = "accepted"
ABANDONED = "abandoned"

TRANSCRIPT_FORMAT_VERSION = 1


@dataclass
class Step:
    step_number: int
    decision_vector: DecisionVector
    seed: int
    draft: ExamDraft | None = None
    feasibility: FeasibilityReport | None = None

    @property
    def ok(self) -> bool:
        return self.draft is not None


def session_id_for_seed(base_seed: int) -> str:
    return f"{mix64(base_seed):016x}"


class Session:
    """One alignment loop against a fixed blueprint and bank snapshot."""

    def __init__(
        self,
        session_id: str,
        blueprint: Blueprint,
        bank: Bank,
        base_seed: int,
        store: "SessionStore | None" = None,
        bank_ref: str | None = None,
    ):
        self.id = session_id
        self.blueprint = blueprint
        self.bank = bank
        self.base_seed = base_seed
        self.bank_ref = bank_ref if bank_ref is not None else bank.digest()
        self.steps: list[Step] = []
        self.status = ACTIVE
        self._store = store

    # -- decision-vector helpers --

    @property
    def latest_dv(self) -> DecisionVector:
        if self.steps:
            return self.steps[-1].decision_vector
        return DecisionVector.all_random(len(self.blueprint.slots))

    def latest_draft(self) -> ExamDraft | None:
        """Most recent successful draft, newest first (used for rendering)."""
        for step in reversed(self.steps):
            if step.draft is not None:
                return step.draft
        return None

    def _require_active(self) -> None:
        if self.status != ACTIVE:
            raise SessionStateError(
                f"session {self.id} is {self.status}; no further changes allowed"
            )

    def pin(self, slot_index: int, problem_id: str) -> DecisionVector:
        """Latest decision vector with one slot pinned; does not step."""
        self._require_active()
        dv = self.latest_dv.pin(slot_index, problem_id)
        dv.validate(self.bank, self.blueprint)
        return dv

    def unpin(self, slot_index: int) -> DecisionVector:
        self._require_active()
        return self.latest_dv.unpin(slot_index)

    # -- the loop --

    def step(self, dv: DecisionVector) -> Step:
        """Sample one draft for dv; infeasibility is recorded, not raised."""
        self._require_active()
        dv.validate(self.bank, self.blueprint)  # errors before sampling
        number = len(self.steps) + 1
        seed = derive_seed(self.base_seed, number)
        try:
            draft = sample_draft(self.bank, self.blueprint, dv, seed)
            step = Step(number, dv, seed, draft=draft)
        except InfeasibleDraftError as exc:
            step = Step(number, dv, seed, feasibility=exc.report)
        self.steps.append(step)
        if self._store is not None:
            self._store.append_step(self.id, step)
        return step

    def accept(
        self,
        current_bank: Bank | None = None,
        persist: "Callable[[Bank], Any] | None" = None,
    ) -> Bank:
        """Commit the latest draft's usage to the bank; terminal.

        ``persist`` (typically ``save_bank``) runs on the updated bank
        before the session is marked accepted, so a failed write leaves
        the session active and the transcript without an accept record.
        """
        from .bank import record_usage

        self._require_active()
        if not self.steps or self.steps[-1].draft is None:
            raise NoDraftError(
                f"session {self.id} has no successful draft to accept"
            )
        bank = current_bank if current_bank is not None else self.bank
        draft = self.steps[-1].draft
        updated = record_usage(bank, draft.assignment, self.blueprint.exam_date)
        if persist is not None:
            persist(updated)
        self.status = ACCEPTED
        if self._store is not None:
            self._store.append_event(self.id, "accept")
        return updated

    def abandon(self) -> None:
        self._require_active()
        self.status = ABANDONED
        if self._store is not None:
            self._store.append_event(self.id, "abandon")

    def history(self) -> tuple[Step, ...]:
        return tuple(self.steps)


def new_session(
    blueprint: Blueprint,
    bank: Bank,
    base_seed: int,
    *,
    session_id: str | None = None,
    store: "SessionStore | None" = None,
) -> Session:
    """Open an active session with zero steps.

    The session id derives from the base seed so seeded CLI runs print
    reproducible output; pass session_id to override.
    """
    require_valid(bank)
    blueprint.validate_against(bank)
    sid = session_id if session_id is not None else session_id_for_seed(base_seed)
    session = Session(sid, blueprint, bank, base_seed, store=store)
    if store is not None:
        store.create(session)
    return session


def replay(
    bank: Bank,
    blueprint: Blueprint,
    base_seed: int,
    decision_vectors: Iterable[DecisionVector],
) -> list[Step]:
    """Recompute every step of a transcript from scratch (no caches)."""
    steps: list[Step] = []
    for number, dv in enumerate(decision_vectors, start=1):
        seed = derive_seed(base_seed, number)
        try:
            draft = sample_draft(bank, blueprint, dv, seed)
            steps.append(Step(number, dv, seed, draft=draft))
        except InfeasibleDraftError as exc:
            steps.append(Step(number, dv, seed, feasibility=exc.report))
    return steps


# ---------------- transcript persistence ----------------


class SessionStore:
    """Append-only JSON-lines transcripts, one file per session."""

    def __init__(self, sessions_dir: str | Path):
        self.dir = Path(sessions_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise SessionNotFoundError(f"invalid session id {session_id!r}")
        return self.dir / f"{session_id}.jsonl"

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).is_file()

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.jsonl"))

    def _append(self, session_id: str, record: dict[str, Any]) -> None:
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with open(self.path(session_id), "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def create(self, session: Session) -> None:
        path = self.path(session.id)
        if path.exists():
            raise SessionExistsError(
                f"session {session.id} already exists at {path}; "
                "a new blueprint or seed starts a new session"
            )
        self._append(
            session.id,
            {
                "record": "new",
                "format_version": TRANSCRIPT_FORMAT_VERSION,
                "session_id": session.id,
                "base_seed": wire.seed_to_json(session.base_seed),
                "bank_ref": session.bank_ref,
                "blueprint": wire.blueprint_to_json(session.blueprint),
            },
        )

    def append_step(self, session_id: str, step: Step) -> None:
        if step.draft is not None:
            outcome: dict[str, Any] = {
                "kind": "draft",
                "assignment": list(step.draft.assignment),
                "seed_used": wire.seed_to_json(step.draft.seed_used),
            }
        else:
            outcome = {
                "kind": "infeasible",
                "feasibility": wire.feasibility_to_json(step.feasibility),
            }
        self._append(
            session_id,
            {
                "record": "step",
                "step_number": step.step_number,
                "decision_vector": wire.dv_to_json(step.decision_vector),
                "seed": wire.seed_to_json(step.seed),
                "outcome": outcome,
            },
        )

    def append_event(self, session_id: str, kind: str) -> None:
        self._append(session_id, {"record": kind})

    def read_records(self, session_id: str) -> list[dict[str, Any]]:
        path = self.path(session_id)
        if not path.is_file():
            raise SessionNotFoundError(f"no session {session_id!r} in {self.dir}")
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ExamForgeError(
                        f"{path}:{lineno}: corrupt transcript line ({exc})"
                    ) from exc
        if not records or records[0].get("record") != "new":
            raise ExamForgeError(f"{path}: transcript must start with a 'new' record")
        return records

    def load(self, session_id: str, bank: Bank) -> Session:
        """Rebuild a session from its transcript against the current bank.

        Draft steps are restored from the cached outcome; metrics are
        recomputed from the bank (they do not depend on usage history).
        """
        records = self.read_records(session_id)
        head = records[0]
        if head.get("format_version") != TRANSCRIPT_FORMAT_VERSION:
            raise ExamForgeError(
                f"unsupported transcript format_version {head.get('format_version')!r}"
            )
        blueprint = wire.blueprint_from_json(head["blueprint"])
        session = Session(
            head["session_id"],
            blueprint,
            bank,
            wire.seed_from_json(head["base_seed"], "base_seed"),
            store=self,
            bank_ref=head.get("bank_ref"),
        )
        for rec in records[1:]:
            kind = rec.get("record")
            if kind == "step":
                dv = wire.dv_from_json(rec["decision_vector"])
                seed = wire.seed_from_json(rec["seed"], "step seed")
                outcome = rec["outcome"]
                if outcome["kind"] == "draft":
                    assignment = tuple(outcome["assignment"])
                    draft = ExamDraft(
                        assignment=assignment,
                        metrics=compute_metrics(bank, assignment),
                        seed_used=wire.seed_from_json(outcome["seed_used"], "seed_used"),
                    )
                    step = Step(rec["step_number"], dv, seed, draft=draft)
                else:
                    step = Step(
                        rec["step_number"],
                        dv,
                        seed,
                        feasibility=wire.feasibility_from_json(outcome["feasibility"]),
                    )
                session.steps.append(step)
            elif kind == "accept":
                session.status = ACCEPTED
            elif kind == "abandon":
                session.status = ABANDONED
            else:
                raise ExamForgeError(f"unknown transcript record {kind!r}")
        return session
