"""Plain-text interchange format for selection instances.

Example::

    # three requests, two SFs
    dims 3 2
    coefficients
    10 9
    8 1
    7 5
    feasible
    1 1
    1 1
    1 1
    utilization
    5 5 5
    capacity
    10 5

An optional ``priorities`` matrix (same shape as ``coefficients``) carries the
priority weights used by the baseline solver.  Sections may appear in any
order after ``dims``.  Blank lines and lines starting with ``#`` are ignored.
A zero-length row or vector is written as ``-``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .solver.model import InstanceError, SelectionInstance

MATRIX_SECTIONS = ("coefficients", "feasible", "priorities")
VECTOR_SECTIONS = ("utilization", "capacity")
REQUIRED = ("coefficients", "feasible", "utilization", "capacity")


class InstanceParseError(ValueError):
    """Malformed instance text; ``line`` is the 1-based line number, if known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class InstanceFile:
    instance: SelectionInstance
    priorities: np.ndarray | None = None


def _tokens(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line.split()


def _reals(tokens: list[str], no: int, width: int, what: str) -> list[float]:
    if tokens == ["-"]:
        tokens = []
    if len(tokens) != width:
        raise InstanceParseError(f"{what} has {len(tokens)} values, expected {width}", no)
    out = []
    for t in tokens:
        try:
            v = float(t)
        except ValueError:
            raise InstanceParseError(f"{what}: {t!r} is not a number", no) from None
        if not math.isfinite(v):
            raise InstanceParseError(f"{what}: {t!r} is not finite", no)
        out.append(v)
    return out


def _flags(tokens: list[str], no: int, width: int) -> list[bool]:
    vals = _reals(tokens, no, width, "feasible row")
    if any(v not in (0.0, 1.0) for v in vals):
        raise InstanceParseError("feasible entries must be 0 or 1", no)
    return [v == 1.0 for v in vals]


def parse_instance(text: str) -> InstanceFile:
    lines = list(_tokens(text))
    if not lines:
        raise InstanceParseError("empty instance")
    no, head = lines[0]
    if head[0] != "dims" or len(head) != 3:
        raise InstanceParseError("expected 'dims <requests> <sfs>'", no)
    try:
        R, M = int(head[1]), int(head[2])
    except ValueError:
        raise InstanceParseError("dims must be integers", no) from None
    if R < 0 or M < 0:
        raise InstanceParseError("dims must be nonnegative", no)

    sections: dict[str, object] = {}
    i = 1
    while i < len(lines):
        no, toks = lines[i]
        name = toks[0]
        if len(toks) != 1 or name not in MATRIX_SECTIONS + VECTOR_SECTIONS:
            raise InstanceParseError(f"expected a section name, got {' '.join(toks)!r}", no)
        if name in sections:
            raise InstanceParseError(f"duplicate section {name!r}", no)
        i += 1
        if name in VECTOR_SECTIONS:
            width = R if name == "utilization" else M
            if i >= len(lines):
                raise InstanceParseError(f"section {name!r} is missing its values", no)
            vno, vtoks = lines[i]
            sections[name] = _reals(vtoks, vno, width, name)
            i += 1
            continue
        rows = []
        for _ in range(R):
            if i >= len(lines):
                raise InstanceParseError(f"section {name!r} has {len(rows)} rows, expected {R}", no)
            rno, rtoks = lines[i]
            if name == "feasible":
                rows.append(_flags(rtoks, rno, M))
            else:
                rows.append(_reals(rtoks, rno, M, f"{name} row"))
            i += 1
        sections[name] = rows

    missing = [s for s in REQUIRED if s not in sections]
    if missing:
        raise InstanceParseError(f"missing section(s): {', '.join(missing)}")
    shape = (R, M)
    try:
        inst = SelectionInstance(
            np.array(sections["coefficients"], dtype=float).reshape(shape),
            np.array(sections["feasible"], dtype=bool).reshape(shape),
            np.array(sections["utilization"], dtype=float),
            np.array(sections["capacity"], dtype=float))
    except InstanceError as exc:
        raise InstanceParseError(str(exc)) from None
    pri = sections.get("priorities")
    return InstanceFile(inst, None if pri is None else np.array(pri, dtype=float).reshape(shape))


def load_instance(path: str | Path) -> InstanceFile:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in values) or "-"


def format_instance(instance: SelectionInstance, priorities=None, comment: str | None = None) -> str:
    R, M = instance.shape
    out = []
    if comment:
        out += [f"# {line}" for line in comment.splitlines()]
    out.append(f"dims {R} {M}")
    out.append("coefficients")
    out += [_row(r) for r in instance.coefficients]
    out.append("feasible")
    out += [" ".join("1" if f else "0" for f in r) or "-" for r in instance.feasible]
    if priorities is not None:
        out.append("priorities")
        out += [_row(r) for r in np.asarray(priorities, dtype=float).reshape(R, M)]
    out.append("utilization")
    out.append(_row(instance.utilization))
    out.append("capacity")
    out.append(_row(instance.capacity))
    return "\n".join(out) + "\n"


def save_instance(path: str | Path, instance: SelectionInstance, priorities=None,
                  comment: str | None = None) -> None:
    Path(path).write_text(format_instance(instance, priorities, comment), encoding="utf-8")
