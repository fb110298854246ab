"""Feasibility counting and exact uniform sampling of exam drafts.

Given a blueprint and a decision vector, the sampler draws uniformly from
the set of all duplicate-free exams that hit the exact point target:

1. Pinned slots are fixed; their points reduce the remaining budget and
   their ids are excluded from every random slot's candidate list.
2. A dynamic-programming table counts, for each random slot j and budget
   p, the number of ordered ways to fill slots j.. with exactly p points
   (duplicates across slots permitted at this stage; arbitrary-precision
   integers throughout).
3. Slots are filled left to right; at slot j with budget p a candidate c
   is chosen with probability N[j+1][p - points(c)] / N[j][p].  Candidates
   are enumerated in (points, id) order and one bounded PRNG draw decides
   both the point value and the member, which realizes exactly that
   distribution.
4. A full assignment containing a duplicate id is discarded and resampled
   from scratch with the next PRNG draws; likewise an assignment whose
   weighted difficulty falls outside the blueprint's band.  Rejection
   preserves uniformity over the surviving subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Any, Iterable, Sequence

from .bank import Bank, Problem, require_valid
from .errors import (
    BlueprintError,
    DecisionVectorError,
    DifficultyBandError,
    InfeasibleDraftError,
    RestartLimitError,
    UnknownSubareaError,
)
from .rng import SplitMix64

DUPLICATE_RESTART_LIMIT = 10_000
BAND_REJECTION_LIMIT = 10_000
EXACT_WITNESS_LIMIT = 10**6
WITNESS_SAMPLE_COUNT = 10_000
# fixed so check_feasibility is a deterministic function of its inputs
WITNESS_SAMPLING_SEED = 0x5EED_CAFE_F00D_BEEF


@dataclass(frozen=True)
class Slot:
    """One problem position in the exam, bound to a subarea."""

    index: int  # 1-based
    subarea: str


@dataclass(frozen=True)
class Blueprint:
    """What the exam must look like: slots, exact point target, date."""

    slots: tuple[Slot, ...]
    target_points: int
    exam_date: date
    recency_window_days: int = 730
    difficulty_band: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.slots:
            raise BlueprintError("blueprint needs at least one slot")
        indices = [s.index for s in self.slots]
        if indices != list(range(1, len(self.slots) + 1)):
            raise BlueprintError(
                f"slot indices must be contiguous 1..{len(self.slots)}, got {indices}"
            )
        if self.target_points < 1:
            raise BlueprintError(
                f"target_points must be positive, got {self.target_points}"
            )
        if self.recency_window_days < 0:
            raise BlueprintError("recency_window_days must be non-negative")
        if self.difficulty_band is not None:
            lo, hi = self.difficulty_band
            if not 0.0 <= lo <= hi <= 1.0:
                raise BlueprintError(
                    f"difficulty_band must satisfy 0 <= min <= max <= 1, got {lo}..{hi}"
                )

    @classmethod
    def from_subareas(
        cls,
        subareas: Sequence[str],
        target_points: int,
        exam_date: date,
        **kwargs: Any,
    ) -> "Blueprint":
        slots = tuple(Slot(i, code) for i, code in enumerate(subareas, start=1))
        return cls(slots=slots, target_points=target_points, exam_date=exam_date, **kwargs)

    def slot(self, slot_index: int) -> Slot:
        if not 1 <= slot_index <= len(self.slots):
            raise BlueprintError(
                f"slot index {slot_index} out of range 1..{len(self.slots)}"
            )
        return self.slots[slot_index - 1]

    def validate_against(self, bank: Bank) -> None:
        for s in self.slots:
            if s.subarea not in bank.subareas:
                raise UnknownSubareaError(
                    f"slot {s.index}: unknown subarea {s.subarea!r}"
                )


@dataclass(frozen=True)
class DecisionVector:
    """Per-slot steering entries: None = R (random), problem id = M (manual)."""

    entries: tuple[str | None, ...]

    @classmethod
    def all_random(cls, n: int) -> "DecisionVector":
        return cls(entries=(None,) * n)

    def pin(self, slot_index: int, problem_id: str) -> "DecisionVector":
        self._check_slot(slot_index)
        entries = list(self.entries)
        entries[slot_index - 1] = problem_id
        return DecisionVector(tuple(entries))

    def unpin(self, slot_index: int) -> "DecisionVector":
        self._check_slot(slot_index)
        entries = list(self.entries)
        entries[slot_index - 1] = None
        return DecisionVector(tuple(entries))

    def _check_slot(self, slot_index: int) -> None:
        if not 1 <= slot_index <= len(self.entries):
            raise DecisionVectorError(
                f"slot index {slot_index} out of range 1..{len(self.entries)}"
            )

    def pinned(self) -> dict[int, str]:
        return {
            i: pid for i, pid in enumerate(self.entries, start=1) if pid is not None
        }

    def validate(self, bank: Bank, blueprint: Blueprint) -> None:
        if len(self.entries) != len(blueprint.slots):
            raise DecisionVectorError(
                f"decision vector has {len(self.entries)} entries for "
                f"{len(blueprint.slots)} slots"
            )
        seen: set[str] = set()
        for slot, pid in zip(blueprint.slots, self.entries):
            if pid is None:
                continue
            if pid in seen:
                raise DecisionVectorError(f"problem {pid!r} pinned in two slots")
            seen.add(pid)
            if pid not in bank.problems_by_id:
                raise DecisionVectorError(
                    f"slot {slot.index}: pinned problem {pid!r} does not exist"
                )
            problem = bank.problems_by_id[pid]
            if problem.subarea != slot.subarea:
                raise DecisionVectorError(
                    f"slot {slot.index}: pinned problem {pid!r} belongs to subarea "
                    f"{problem.subarea!r}, slot draws from {slot.subarea!r}"
                )

    def __str__(self) -> str:
        parts = ["R" if pid is None else f"M({pid})" for pid in self.entries]
        return "[" + " ".join(parts) + "]"


@dataclass(frozen=True)
class DraftMetrics:
    total_points: int
    weighted_difficulty: float
    solo_histogram: tuple[int, int, int, int, int]  # levels 1..5
    ilo_coverage: tuple[str, ...]  # sorted


@dataclass(frozen=True)
class ExamDraft:
    assignment: tuple[str, ...]
    metrics: DraftMetrics
    seed_used: int


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    completion_count: int
    achievable_point_range: tuple[int, int] | None
    per_slot_candidate_counts: tuple[int, ...]
    verdict: str = "exact"  # "probabilistic" when decided by bounded sampling


# ---------------- candidate eligibility ----------------


def eligible_candidates(
    bank: Bank,
    blueprint: Blueprint,
    slot_index: int,
    excluded_ids: Iterable[str] = (),
) -> list[Problem]:
    """Problems a random slot may draw: right subarea, not excluded,
    not used within the recency window before the exam date.  Sorted by id."""
    require_valid(bank)
    slot = blueprint.slot(slot_index)
    excluded = set(excluded_ids)
    window = blueprint.recency_window_days
    return [
        p
        for p in bank.by_subarea.get(slot.subarea, ())
        if p.id not in excluded and not p.used_within(blueprint.exam_date, window)
    ]


# ---------------- completion counting ----------------


def count_completions(
    candidate_point_lists: Sequence[Sequence[int]], remaining_points: int
) -> list[list[int]]:
    """DP table over the random slots.

    table[j][p] is the number of ordered ways to fill slots j.. with total
    points exactly p, drawing each slot's value from its candidate list
    (duplicates across slots permitted).  table has len(lists)+1 rows; the
    last row is the empty suffix ([1, 0, ..., 0]); table[0][remaining]
    is the total completion count.
    """
    if remaining_points < 0:
        raise BlueprintError(
            f"pinned problems exceed the point target by {-remaining_points}"
        )
    k = len(candidate_point_lists)
    width = remaining_points + 1
    table: list[list[int]] = [[0] * width for _ in range(k + 1)]
    table[k][0] = 1
    for j in range(k - 1, -1, -1):
        # group equal point values: cost per row is O(width * distinct values)
        counts: dict[int, int] = {}
        for v in candidate_point_lists[j]:
            counts[v] = counts.get(v, 0) + 1
        nxt = table[j + 1]
        row = table[j]
        for v, cnt in counts.items():
            if v > remaining_points:
                continue
            for p in range(v, width):
                n = nxt[p - v]
                if n:
                    row[p] += cnt * n
    return table


# ---------------- metrics ----------------


def compute_metrics(bank: Bank, assignment: Sequence[str]) -> DraftMetrics:
    require_valid(bank)
    problems = [bank.problem(pid) for pid in assignment]
    return _metrics_of(problems)


def _metrics_of(problems: Sequence[Problem]) -> DraftMetrics:
    total = sum(p.points for p in problems)
    weighted = sum(p.points * p.difficulty for p in problems) / total
    histogram = [0] * 5
    ilos: set[str] = set()
    for p in problems:
        histogram[p.solo_level - 1] += 1
        ilos.update(p.ilo_refs)
    return DraftMetrics(
        total_points=total,
        weighted_difficulty=weighted,
        solo_histogram=tuple(histogram),
        ilo_coverage=tuple(sorted(ilos)),
    )


# ---------------- the sampler ----------------


class DraftSampler:
    """Tables for one (bank, blueprint, decision vector), reusable across seeds.

    Building the sampler validates all three inputs and runs the counting
    DP once; ``sample(seed)`` is then cheap, which matters for bulk draws
    (uniformity testing, witness sampling).
    """

    def __init__(self, bank: Bank, blueprint: Blueprint, dv: DecisionVector):
        require_valid(bank)
        blueprint.validate_against(bank)
        dv.validate(bank, blueprint)
        self.bank = bank
        self.blueprint = blueprint
        self.dv = dv

        pinned = dv.pinned()  # slot_index -> problem id
        self._pinned_problems = {
            i: bank.problem(pid) for i, pid in pinned.items()
        }
        pinned_points = sum(p.points for p in self._pinned_problems.values())
        self.remaining_points = blueprint.target_points - pinned_points

        excluded = set(pinned.values())
        self._r_slots: list[int] = []  # slot indices of random slots, ascending
        self._slot_candidates: dict[int, list[Problem]] = {}
        for slot in blueprint.slots:
            if slot.index in pinned:
                continue
            self._r_slots.append(slot.index)
            self._slot_candidates[slot.index] = eligible_candidates(
                bank, blueprint, slot.index, excluded
            )

        # per random slot: ascending point values, members in id order
        self._buckets: list[list[tuple[int, list[Problem]]]] = []
        for idx in self._r_slots:
            grouped: dict[int, list[Problem]] = {}
            for p in self._slot_candidates[idx]:
                grouped.setdefault(p.points, []).append(p)
            self._buckets.append(sorted(grouped.items()))

        budget = max(self.remaining_points, 0)
        point_lists = [
            [p.points for p in self._slot_candidates[idx]] for idx in self._r_slots
        ]
        self._table = count_completions(point_lists, budget)
        if self.remaining_points < 0:
            self.completion_count = 0
        else:
            self.completion_count = self._table[0][self.remaining_points]

    # -- reporting --

    def feasibility_report(
        self, feasible: bool, verdict: str = "exact"
    ) -> FeasibilityReport:
        counts = []
        for slot in self.blueprint.slots:
            if slot.index in self._pinned_problems:
                counts.append(1)
            else:
                counts.append(len(self._slot_candidates[slot.index]))
        pinned_points = sum(p.points for p in self._pinned_problems.values())
        point_range: tuple[int, int] | None = None
        if all(self._slot_candidates[idx] for idx in self._r_slots):
            lo = pinned_points + sum(b[0][0] for b in self._buckets)
            hi = pinned_points + sum(b[-1][0] for b in self._buckets)
            point_range = (lo, hi)
        return FeasibilityReport(
            feasible=feasible,
            completion_count=self.completion_count,
            achievable_point_range=point_range,
            per_slot_candidate_counts=tuple(counts),
            verdict=verdict,
        )

    # -- sampling --

    def _draw_completion(self, stream: SplitMix64) -> list[Problem]:
        chosen: list[Problem] = []
        p = self.remaining_points
        for j in range(len(self._r_slots)):
            nxt = self._table[j + 1]
            r = stream.next_below(self._table[j][p])
            for v, members in self._buckets[j]:
                if v > p:
                    break  # values ascend; the rest cannot fit
                n = nxt[p - v]
                w = len(members) * n
                if r < w:
                    chosen.append(members[r // n])
                    p -= v
                    break
                r -= w
            else:  # pragma: no cover - DP consistency guarantees a hit
                raise AssertionError("slot draw fell off the bucket table")
        return chosen

    def _assemble(self, drawn: Sequence[Problem]) -> list[Problem]:
        drawn_iter = iter(drawn)
        out: list[Problem] = []
        for slot in self.blueprint.slots:
            if slot.index in self._pinned_problems:
                out.append(self._pinned_problems[slot.index])
            else:
                out.append(next(drawn_iter))
        return out

    def sample(self, seed: int) -> ExamDraft:
        """One uniform draw over duplicate-free (and band-satisfying) exams."""
        if self.remaining_points < 0 or self.completion_count == 0:
            raise InfeasibleDraftError(
                "no completion hits the point target", self.feasibility_report(False)
            )
        band = self.blueprint.difficulty_band
        stream = SplitMix64(seed)
        dup_restarts = 0
        band_rejections = 0
        seen_lo = seen_hi = None
        while True:
            drawn = self._draw_completion(stream)
            if len({p.id for p in drawn}) != len(drawn):
                dup_restarts += 1
                if dup_restarts > DUPLICATE_RESTART_LIMIT:
                    self._resolve_duplicate_deadlock(dup_restarts)
                continue
            problems = self._assemble(drawn)
            metrics = _metrics_of(problems)
            if band is not None and not (
                band[0] <= metrics.weighted_difficulty <= band[1]
            ):
                band_rejections += 1
                wd = metrics.weighted_difficulty
                seen_lo = wd if seen_lo is None else min(seen_lo, wd)
                seen_hi = wd if seen_hi is None else max(seen_hi, wd)
                if band_rejections > BAND_REJECTION_LIMIT:
                    raise DifficultyBandError(
                        f"difficulty band [{band[0]}, {band[1]}] unsatisfied after "
                        f"{BAND_REJECTION_LIMIT} rejections; observed weighted "
                        f"difficulties in [{seen_lo:.4f}, {seen_hi:.4f}]",
                        details={"observed_min": seen_lo, "observed_max": seen_hi},
                    )
                continue
            assignment = tuple(p.id for p in problems)
            assert metrics.total_points == self.blueprint.target_points
            return ExamDraft(assignment=assignment, metrics=metrics, seed_used=seed)

    def _resolve_duplicate_deadlock(self, restarts: int) -> None:
        if self.completion_count <= EXACT_WITNESS_LIMIT:
            if self._find_witness() is None:
                raise InfeasibleDraftError(
                    "every completion repeats a problem; no duplicate-free exam exists",
                    self.feasibility_report(False),
                )
        raise RestartLimitError(
            f"degenerate duplicate structure: {restarts} resampling restarts, "
            f"{self.completion_count} completions ignoring duplicate-freeness",
            details={"restarts": restarts, "completion_count": self.completion_count},
        )

    # -- exact duplicate-free search (bounded by completion_count) --

    def _find_witness(self) -> list[Problem] | None:
        """Depth-first search over completions for a duplicate-free one."""
        if self.remaining_points < 0 or self.completion_count == 0:
            return None
        k = len(self._r_slots)
        chosen: list[Problem] = []
        used: set[str] = set()

        def dfs(j: int, p: int) -> bool:
            if j == k:
                return p == 0
            nxt = self._table[j + 1]
            for v, members in self._buckets[j]:
                if v > p:
                    break
                if nxt[p - v] == 0:
                    continue
                for prob in members:
                    if prob.id in used:
                        continue
                    used.add(prob.id)
                    chosen.append(prob)
                    if dfs(j + 1, p - v):
                        return True
                    chosen.pop()
                    used.remove(prob.id)
            return False

        if dfs(0, self.remaining_points):
            return chosen
        return None

    def decide_feasibility(self) -> FeasibilityReport:
        """Exact verdict where affordable, bounded witness sampling beyond."""
        if self.remaining_points < 0 or self.completion_count == 0:
            return self.feasibility_report(False)
        if self.completion_count <= EXACT_WITNESS_LIMIT:
            return self.feasibility_report(self._find_witness() is not None)
        stream = SplitMix64(WITNESS_SAMPLING_SEED)
        for _ in range(WITNESS_SAMPLE_COUNT):
            drawn = self._draw_completion(stream)
            if len({p.id for p in drawn}) == len(drawn):
                return self.feasibility_report(True)  # a witness is proof
        return self.feasibility_report(False, verdict="probabilistic")


# ---------------- public operations ----------------


def sample_draft(
    bank: Bank, blueprint: Blueprint, dv: DecisionVector, seed: int
) -> ExamDraft:
    """Uniform draw over all duplicate-free completions consistent with dv.

    Deterministic for fixed (bank, blueprint, dv, seed).
    """
    return DraftSampler(bank, blueprint, dv).sample(seed)


def check_feasibility(
    bank: Bank, blueprint: Blueprint, dv: DecisionVector
) -> FeasibilityReport:
    return DraftSampler(bank, blueprint, dv).decide_feasibility()
