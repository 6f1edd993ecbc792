"""Line-oriented text formats for spaces, functions, molecules and plans.

Space files::

    points 3 base 0
    a
    b
    c
    1.0 2.0
    1.5

The header is followed by the point names, one per line, then the
n(n-1)/2 upper-triangular distances in row-major order (any whitespace
layout). Function and molecule files hold ``name value`` pairs. Blank lines
and ``#`` comments are ignored everywhere; NaN and Inf are rejected.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .metric_core import LipFunction, Molecule, PointedMetricSpace


class FormatError(ValueError):
    pass


def content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((no, line))
    return out


def parse_number(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: not a number: {tok!r}") from None
    if not math.isfinite(x):
        raise FormatError(f"line {lineno}: non-finite value {tok!r}")
    return x


def _fmt(x: float) -> str:
    return repr(float(x))


def parse_space(text: str) -> PointedMetricSpace:
    lines = content_lines(text)
    if not lines:
        raise FormatError("empty space file")
    lineno, header = lines[0]
    toks = header.split()
    if len(toks) != 4 or toks[0] != "points" or toks[2] != "base":
        raise FormatError(f"line {lineno}: expected 'points n base i', got {header!r}")
    try:
        n, base = int(toks[1]), int(toks[3])
    except ValueError:
        raise FormatError(f"line {lineno}: bad header {header!r}") from None
    if n < 1:
        raise FormatError(f"line {lineno}: need at least one point")
    if len(lines) < 1 + n:
        raise FormatError(f"expected {n} point names")
    names = []
    for no, line in lines[1:1 + n]:
        if len(line.split()) != 1:
            raise FormatError(f"line {no}: point names may not contain whitespace: {line!r}")
        names.append(line)
    values = [parse_number(tok, no) for no, line in lines[1 + n:] for tok in line.split()]
    m = n * (n - 1) // 2
    if len(values) != m:
        raise FormatError(f"expected {m} distances, found {len(values)}")
    dist = np.zeros((n, n))
    dist[np.triu_indices(n, k=1)] = values
    dist = dist + dist.T
    try:
        return PointedMetricSpace(tuple(names), dist, base)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_space(space: PointedMetricSpace) -> str:
    n = space.n_points
    out = [f"points {n} base {space.base}", *space.points]
    d = space.dist
    for i in range(n - 1):
        out.append(" ".join(_fmt(d[i, j]) for j in range(i + 1, n)))
    return "\n".join(out) + "\n"


def parse_pairs(text: str) -> dict[str, float]:
    pairs: dict[str, float] = {}
    for no, line in content_lines(text):
        toks = line.split()
        if len(toks) != 2:
            raise FormatError(f"line {no}: expected 'name value', got {line!r}")
        if toks[0] in pairs:
            raise FormatError(f"line {no}: duplicate entry for {toks[0]!r}")
        pairs[toks[0]] = parse_number(toks[1], no)
    return pairs


def format_pairs(items: Iterable[tuple[str, float]]) -> str:
    return "".join(f"{name} {_fmt(v)}\n" for name, v in items)


def _resolve(space: PointedMetricSpace, pairs: dict[str, float]) -> None:
    unknown = [k for k in pairs if k not in space.points]
    if unknown:
        raise FormatError(f"unknown point(s): {', '.join(unknown)}")


def parse_molecule(text: str, space: PointedMetricSpace) -> Molecule:
    """Unlisted points get coefficient 0."""
    pairs = parse_pairs(text)
    _resolve(space, pairs)
    return Molecule.from_mapping(space, pairs)


def parse_function(text: str, space: PointedMetricSpace) -> LipFunction:
    """Every non-base point must be listed; the base may be omitted."""
    pairs = parse_pairs(text)
    _resolve(space, pairs)
    missing = [p for i, p in enumerate(space.points) if i != space.base and p not in pairs]
    if missing:
        raise FormatError(f"missing value(s) for: {', '.join(missing)}")
    try:
        return LipFunction.from_mapping(space, pairs)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_molecule(mu: Molecule) -> str:
    return format_pairs((p, c) for p, c in zip(mu.space.points, mu.coeffs) if c != 0.0)


def format_function(f: LipFunction) -> str:
    return format_pairs(zip(f.space.points, f.values))


def format_plan(plan, space: PointedMetricSpace) -> str:
    """Transport plan as ``from to amount`` lines."""
    return "".join(f"{space.points[p]} {space.points[q]} {_fmt(w)}\n"
                   for (p, q), w in sorted(plan.flows.items()))


def read_text(path: str | Path | TextIO) -> str:
    if hasattr(path, "read"):
        return path.read()
    return Path(path).read_text()


def load_space(path) -> PointedMetricSpace:
    return parse_space(read_text(path))


def load_molecule(path, space: PointedMetricSpace) -> Molecule:
    return parse_molecule(read_text(path), space)


def load_function(path, space: PointedMetricSpace) -> LipFunction:
    return parse_function(read_text(path), space)
