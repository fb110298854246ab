"""Merges a draft into examination and solutions LaTeX documents.

Bank fragments are authored LaTeX and are inserted verbatim; only
metadata text (title, instructions, ...) passes through ``escape_text``.
Output is byte-deterministic for fixed inputs: UTF-8, LF line endings,
fixed built-in preamble unless CourseMeta carries a template override.
PDF compilation is out of process and out of scope; the emitted ``.tex``
is the correctness surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .bank import Bank, Problem
from .errors import RenderError
from .selector import Blueprint, ExamDraft

EXAM = "exam"
SOLUTIONS = "solutions"

# LaTeX-special characters in metadata, and nothing else.
_ESCAPES = {
    "\\": r"\textbackslash{}",
    "#": r"\#",
    "$": r"\$",
    "%": r"\%",
    "&": r"\&",
    "_": r"\_",
    "{": r"\{",
    "}": r"\}",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
}

DEFAULT_PREAMBLE = """\\documentclass[11pt]{article}
\\usepackage[T1]{fontenc}
\\usepackage[utf8]{inputenc}
\\usepackage{amsmath,amssymb}
\\usepackage[margin=25mm]{geometry}
\\setlength{\\parindent}{0pt}
"""


def escape_text(s: str) -> str:
    """Escape the LaTeX-special characters # $ % & _ { } ~ ^ \\ in metadata."""
    return "".join(_ESCAPES.get(ch, ch) for ch in s)


@dataclass(frozen=True)
class CourseMeta:
    """Exam header fields; all free text, escaped at render time."""

    course_title: str
    course_code: str = ""
    exam_date: str = ""
    instructions_text: str = ""
    points_summary_note: str = ""
    template_path: str | Path | None = None  # preamble override

    def __post_init__(self) -> None:
        if not self.course_title:
            raise RenderError("course_title must be nonempty")


@dataclass(frozen=True)
class RenderedDoc:
    kind: str  # EXAM or SOLUTIONS
    content: str
    warnings: tuple[str, ...] = ()


def default_meta(blueprint: Blueprint) -> CourseMeta:
    """The meta used when none is configured; CLI and API must agree on it."""
    return CourseMeta(course_title="Examination", exam_date=blueprint.exam_date.isoformat())


def _preamble(meta: CourseMeta) -> str:
    if meta.template_path is None:
        return DEFAULT_PREAMBLE
    path = Path(meta.template_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RenderError(f"preamble template {path} unreadable: {exc}") from exc
    if not text.endswith("\n"):
        text += "\n"
    return text


def _points_label(points: int) -> str:
    return f"{points} point" if points == 1 else f"{points} points"


def _header(meta: CourseMeta, kind: str, out: list[str]) -> None:
    out.append("\\begin{center}\n")
    out.append("{\\LARGE " + escape_text(meta.course_title) + "}\\\\[6pt]\n")
    if kind == SOLUTIONS:
        out.append("{\\large Solutions}\\\\[4pt]\n")
    if meta.course_code:
        out.append("{\\large " + escape_text(meta.course_code) + "}\\\\[4pt]\n")
    if meta.exam_date:
        out.append(escape_text(meta.exam_date) + "\n")
    out.append("\\end{center}\n")
    if meta.instructions_text:
        out.append("\n" + escape_text(meta.instructions_text) + "\n")
    if meta.points_summary_note:
        out.append("\n" + escape_text(meta.points_summary_note) + "\n")


def _fragment(text: str) -> str:
    return text if text.endswith("\n") else text + "\n"


def _render(
    draft: ExamDraft, bank: Bank, meta: CourseMeta, kind: str
) -> RenderedDoc:
    problems: list[Problem] = [bank.problem(pid) for pid in draft.assignment]
    warnings: list[str] = []
    out: list[str] = [_preamble(meta), "\\begin{document}\n\n"]
    _header(meta, kind, out)

    for number, problem in enumerate(problems, start=1):
        if kind == EXAM:
            heading = f"Problem {number} ({_points_label(problem.points)})"
            body = problem.statement_text
            if body is None:
                raise RenderError(
                    f"problem {problem.id!r}: statement fragment not available"
                )
        else:
            heading = f"Solution {number}"
            body = problem.solution_text
            if body is None:
                raise RenderError(
                    f"problem {problem.id!r}: solution fragment not available"
                )
            if not body.strip():
                warnings.append(
                    f"problem {problem.id!r}: solution fragment is empty"
                )
                body = "Solution not provided.\n"
        out.append(f"\n\\section*{{{heading}}}\n")
        out.append(_fragment(body))

    if kind == EXAM:
        out.append("\n\\bigskip\n")
        out.append(
            f"\\noindent Total: {_points_label(draft.metrics.total_points)}\n"
        )
    out.append("\n\\end{document}\n")
    return RenderedDoc(kind=kind, content="".join(out), warnings=tuple(warnings))


def render_exam(draft: ExamDraft, bank: Bank, meta: CourseMeta) -> RenderedDoc:
    """Examination document: header, then each statement in slot order."""
    return _render(draft, bank, meta, EXAM)


def render_solutions(draft: ExamDraft, bank: Bank, meta: CourseMeta) -> RenderedDoc:
    """Solutions document; numbering mirrors the exam document."""
    return _render(draft, bank, meta, SOLUTIONS)


def output_paths(out_dir: str | Path, stem: str = "exam") -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / f"{stem}.tex", out / f"{stem}-solutions.tex"


def write_doc(doc: RenderedDoc, path: str | Path) -> Path:
    """Write with pinned LF endings regardless of platform."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(doc.content.encode("utf-8"))
    return path
