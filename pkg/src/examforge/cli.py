"""Command-line interface.

Subcommands mirror the assembly loop: validate a bank, open a drafting
session, re-roll with pins, accept, render. Exit codes: 0 on success
(including a step whose draft is infeasible, which is a reported result,
not a failure), 1 on a domain error, 2 on usage errors.

The bank path comes from --bank or the EXAMFORGE_BANK environment
variable. Session transcripts live in <bank dir>/sessions/. With an
explicit --seed, stdout for new/step is reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import shlex
import subprocess
import sys
from datetime import date
from pathlib import Path
from typing import Any

from . import wire
from .bank import Bank, bank_lock, load_bank, save_bank
from .composer import (
    default_meta,
    output_paths,
    render_exam,
    render_solutions,
    write_doc,
)
from .errors import BankLoadError, ExamForgeError, error_payload
from .selector import Blueprint
from .session import Session, SessionStore, Step, new_session

SESSIONS_DIRNAME = "sessions"
MAX_SEED = 2**64 - 1


# ---------------- argument parsing helpers ----------------


def _arg_date(raw: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {raw!r}")


def _arg_seed(raw: str) -> int:
    try:
        value = int(raw, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {raw!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return value


def _arg_band(raw: str) -> tuple[float, float]:
    lo, sep, hi = raw.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {raw!r}")
    try:
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX numbers, got {raw!r}")


def _arg_pin(raw: str) -> tuple[int, str]:
    slot, sep, pid = raw.partition("=")
    if not sep or not pid:
        raise argparse.ArgumentTypeError(f"expected SLOT=PROBLEM_ID, got {raw!r}")
    try:
        return int(slot, 10), pid
    except ValueError:
        raise argparse.ArgumentTypeError(f"slot must be an integer, got {slot!r}")


def _arg_listen(raw: str) -> tuple[str, int]:
    host, sep, port = raw.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected ADDR:PORT, got {raw!r}")
    try:
        return host, int(port, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"port must be an integer, got {port!r}")


def _bank_path(args: argparse.Namespace) -> str:
    path = args.bank or os.environ.get("EXAMFORGE_BANK")
    if not path:
        raise ExamForgeError("no bank given: pass --bank or set EXAMFORGE_BANK")
    return path


def _store_for(bank: Bank) -> SessionStore:
    return SessionStore(Path(bank.root) / SESSIONS_DIRNAME)


def _print_json(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


# ---------------- human-readable step output ----------------


def _print_step_text(bank: Bank, session: Session, step: Step) -> None:
    print(f"session {session.id}  step {step.step_number}  dv {step.decision_vector}")
    if step.draft is None:
        report = step.feasibility
        print("no draft: the blueprint is infeasible against this bank")
        print(f"  completion count: {report.completion_count} ({report.verdict})")
        rng = report.achievable_point_range
        if rng is None:
            print("  achievable points: none (a slot has no candidates)")
        else:
            print(f"  achievable points: {rng[0]}..{rng[1]}")
        counts = ", ".join(str(c) for c in report.per_slot_candidate_counts)
        print(f"  candidates per slot: {counts}")
        return
    draft = step.draft
    for slot, pid, entry in zip(
        session.blueprint.slots, draft.assignment, step.decision_vector.entries
    ):
        p = bank.problem(pid)
        pin = "  [pinned]" if entry is not None else ""
        print(
            f"  slot {slot.index}  {slot.subarea:<12} {pid:<16} "
            f"{p.points:>3} pt  solo {p.solo_level}  diff {p.difficulty:.2f}{pin}"
        )
    m = draft.metrics
    ilos = " ".join(m.ilo_coverage) if m.ilo_coverage else "-"
    print(
        f"  total {m.total_points} pt  weighted difficulty {m.weighted_difficulty:.4f}"
    )
    print(f"  solo histogram {list(m.solo_histogram)}  ilos {ilos}")


def _step_payload(bank: Bank, session: Session, step: Step) -> dict[str, Any]:
    payload = {
        "session_id": session.id,
        "status": session.status,
        "base_seed": wire.seed_to_json(session.base_seed),
    }
    payload.update(wire.step_to_json(bank, session.blueprint, step))
    return payload


# ---------------- subcommand handlers ----------------


def _cmd_bank_validate(args: argparse.Namespace) -> int:
    try:
        bank = load_bank(args.path)
    except BankLoadError as exc:
        if args.format == "json":
            _print_json({"ok": False, "errors": exc.issues, "warnings": []})
        else:
            print("bank load failed:", file=sys.stderr)
            for issue in exc.issues:
                print(f"  error: {issue}", file=sys.stderr)
        return 1
    report = bank.validation
    if args.format == "json":
        payload = report.to_json()
        payload["ok"] = report.ok
        payload["problems"] = len(bank.problems)
        payload["subareas"] = len(bank.subareas)
        _print_json(payload)
        return 0 if report.ok else 1
    for issue in report.errors:
        where = f" [{issue.problem_id}]" if issue.problem_id else ""
        print(f"error {issue.rule_code}{where}: {issue.message}")
    for issue in report.warnings:
        where = f" [{issue.problem_id}]" if issue.problem_id else ""
        print(f"warning {issue.rule_code}{where}: {issue.message}")
    if report.ok:
        print(
            f"ok: {len(bank.problems)} problems, {len(bank.subareas)} subareas, "
            f"{len(report.warnings)} warnings"
        )
        return 0
    print(f"invalid: {len(report.errors)} errors, {len(report.warnings)} warnings")
    return 1


def _cmd_exam_new(args: argparse.Namespace) -> int:
    subareas: list[str] = []
    for chunk in args.slot:
        subareas.extend(s.strip() for s in chunk.split(",") if s.strip())
    kwargs: dict[str, Any] = {}
    if args.recency_days is not None:
        kwargs["recency_window_days"] = args.recency_days
    if args.difficulty is not None:
        kwargs["difficulty_band"] = args.difficulty
    blueprint = Blueprint.from_subareas(subareas, args.points, args.date, **kwargs)
    bank = load_bank(_bank_path(args))
    seed = args.seed if args.seed is not None else secrets.randbits(64)
    session = new_session(blueprint, bank, seed, store=_store_for(bank))
    step = session.step(session.latest_dv)
    if args.format == "json":
        _print_json(_step_payload(bank, session, step))
    else:
        print(f"new session {session.id}  base seed {session.base_seed}")
        _print_step_text(bank, session, step)
    return 0


def _load_session(args: argparse.Namespace) -> tuple[Bank, Session]:
    bank = load_bank(_bank_path(args))
    session = _store_for(bank).load(args.session, bank)
    return bank, session


def _cmd_exam_step(args: argparse.Namespace) -> int:
    bank, session = _load_session(args)
    dv = session.latest_dv
    for slot_index in args.unpin or ():
        dv = dv.unpin(slot_index)
    for slot_index, problem_id in args.pin or ():
        dv = dv.pin(slot_index, problem_id)
    step = session.step(dv)
    if args.format == "json":
        _print_json(_step_payload(bank, session, step))
    else:
        _print_step_text(bank, session, step)
    return 0


def _cmd_exam_accept(args: argparse.Namespace) -> int:
    bank_path = _bank_path(args)
    # Re-read under the lock so a concurrent accept's usage dates are seen.
    probe = load_bank(bank_path)
    with bank_lock(probe.root):
        bank = load_bank(probe.root)
        session = _store_for(bank).load(args.session, bank)
        session.accept(bank, persist=save_bank)
    draft = session.latest_draft()
    if args.format == "json":
        _print_json(
            {
                "session_id": session.id,
                "status": session.status,
                "assignment": list(draft.assignment),
                "exam_date": session.blueprint.exam_date.isoformat(),
            }
        )
    else:
        ids = ", ".join(draft.assignment)
        print(
            f"accepted session {session.id}: recorded "
            f"{session.blueprint.exam_date.isoformat()} usage for {ids}"
        )
    return 0


def _cmd_exam_render(args: argparse.Namespace) -> int:
    bank, session = _load_session(args)
    draft = session.latest_draft()
    if draft is None:
        raise ExamForgeError(
            f"session {session.id} has no successful draft to render"
        )
    meta = default_meta(session.blueprint)
    exam_path, solutions_path = output_paths(args.out)
    docs = [(render_exam(draft, bank, meta), exam_path)]
    if args.solutions:
        docs.append((render_solutions(draft, bank, meta), solutions_path))
    written: list[Path] = []
    warnings: list[str] = []
    for doc, path in docs:
        write_doc(doc, path)
        written.append(path)
        warnings.extend(doc.warnings)
    compile_results = []
    if args.compile:
        command = shlex.split(args.compile)
        for path in written:
            proc = subprocess.run(
                command + [path.name],
                cwd=path.parent,
                capture_output=True,
                text=True,
            )
            compile_results.append((path.name, proc.returncode, proc.stderr))
    if args.format == "json":
        _print_json(
            {
                "files": [p.name for p in written],
                "warnings": warnings,
                "compile": [
                    {"file": name, "returncode": code}
                    for name, code, _ in compile_results
                ],
            }
        )
    else:
        for path in written:
            print(f"wrote {path.name}")
        for warning in warnings:
            print(f"warning: {warning}")
        for name, code, _ in compile_results:
            print(f"compiled {name}: exit {code}")
    for _, code, stderr in compile_results:
        if code != 0:
            if stderr:
                print(stderr.rstrip(), file=sys.stderr)
            return 1
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    host, port = args.listen
    app = create_app(_bank_path(args))
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


# ---------------- parser assembly ----------------


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )


def _add_bank(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--bank",
        metavar="PATH",
        help="bank directory or bank.json (default: $EXAMFORGE_BANK)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="examforge",
        description="assemble written exams from a tagged problem bank",
    )
    top = parser.add_subparsers(dest="command", required=True)

    bank = top.add_parser("bank", help="problem bank maintenance")
    bank_sub = bank.add_subparsers(dest="subcommand", required=True)
    validate = bank_sub.add_parser("validate", help="check a bank and report issues")
    validate.add_argument("path", help="bank directory or bank.json")
    _add_format(validate)
    validate.set_defaults(func=_cmd_bank_validate)

    exam = top.add_parser("exam", help="drafting sessions")
    exam_sub = exam.add_subparsers(dest="subcommand", required=True)

    new = exam_sub.add_parser("new", help="open a session and draw the first draft")
    _add_bank(new)
    new.add_argument("--points", type=int, required=True, help="exact point total")
    new.add_argument(
        "--slot",
        action="append",
        required=True,
        metavar="SUBAREA[,SUBAREA...]",
        help="subarea per slot, in order; repeatable",
    )
    new.add_argument("--date", type=_arg_date, required=True, help="exam date")
    new.add_argument("--seed", type=_arg_seed, help="base seed (default: random)")
    new.add_argument(
        "--recency-days",
        type=int,
        metavar="D",
        help="exclude problems used within D days before the exam (default 730)",
    )
    new.add_argument(
        "--difficulty",
        type=_arg_band,
        metavar="MIN:MAX",
        help="accept only drafts whose weighted difficulty lies in the band",
    )
    _add_format(new)
    new.set_defaults(func=_cmd_exam_new)

    step = exam_sub.add_parser("step", help="re-roll the unpinned slots")
    step.add_argument("session", help="session id")
    _add_bank(step)
    step.add_argument(
        "--pin",
        action="append",
        type=_arg_pin,
        metavar="SLOT=PROBLEM_ID",
        help="keep this problem in this slot; repeatable",
    )
    step.add_argument(
        "--unpin",
        action="append",
        type=int,
        metavar="SLOT",
        help="release a pinned slot; repeatable",
    )
    _add_format(step)
    step.set_defaults(func=_cmd_exam_step)

    accept = exam_sub.add_parser(
        "accept", help="commit the latest draft's usage to the bank"
    )
    accept.add_argument("session", help="session id")
    _add_bank(accept)
    _add_format(accept)
    accept.set_defaults(func=_cmd_exam_accept)

    render = exam_sub.add_parser("render", help="write LaTeX documents")
    render.add_argument("session", help="session id")
    _add_bank(render)
    render.add_argument("--out", required=True, metavar="DIR", help="output directory")
    render.add_argument(
        "--solutions", action="store_true", help="also write exam-solutions.tex"
    )
    render.add_argument(
        "--compile",
        metavar="CMD",
        help="run CMD on each written file, in the output directory",
    )
    _add_format(render)
    render.set_defaults(func=_cmd_exam_render)

    serve = top.add_parser("serve", help="run the HTTP API")
    _add_bank(serve)
    serve.add_argument(
        "--listen",
        type=_arg_listen,
        default=("127.0.0.1", 8321),
        metavar="ADDR:PORT",
        help="bind address (default 127.0.0.1:8321)",
    )
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExamForgeError as exc:
        if getattr(args, "format", "text") == "json":
            _print_json({"error": error_payload(exc)})
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
