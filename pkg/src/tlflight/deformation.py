"""Deformation (truncation) functions g(xi) of a truncated Levy law.

All functions here work in the dimensionless coordinate ``xi = x / l``; the
scale ``l`` is carried by the spec and applied by callers.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

KINDS = ("mantegna_stanley", "exponential", "tabulated")

# g below this value is treated as zero when an infinite range must be cut.
G_FLOOR = 1e-14


class DeformationError(ValueError):
    """Raised for an inadmissible deformation spec; ``problems`` lists every violation."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def problems(kind: str, beta: float = 1.0, l: float = 1.0, table=None) -> list[str]:
    """Return every admissibility violation of the given fields (empty if valid)."""
    out = []
    if kind not in KINDS:
        out.append(f"unknown kind {kind!r}; expected one of {KINDS}")
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and beta > 0):
        out.append("beta must be positive")
    if not (isinstance(l, (int, float)) and math.isfinite(l) and l > 0):
        out.append("l must be positive")
    if kind == "tabulated":
        out.extend(_table_problems(table))
    elif table is not None:
        out.append(f"table given for built-in kind {kind!r}")
    return out


def _table_problems(table) -> list[str]:
    if table is None or len(table) < 3:
        return ["tabulated spec needs a table of at least 3 (xi, g) rows"]
    arr = np.asarray(table, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        return ["table must be a list of (xi, g) pairs"]
    xi, g = arr[:, 0], arr[:, 1]
    out = []
    if not np.all(np.isfinite(arr)):
        out.append("table contains non-finite values")
        return out
    if np.any(np.diff(xi) <= 0):
        out.append("table xi must be strictly increasing")
        return out
    if np.any(g < 0) or np.any(g > 1):
        out.append("g must satisfy 0 <= g <= 1")
    if not (xi[0] < 0 < xi[-1]):
        out.append("table must span xi < 0 and xi > 0")
    else:
        g0 = float(np.interp(0.0, xi, g))
        if abs(g0 - 1.0) > 1e-12:
            out.append(f"g(0) != 1 (got {g0:.12g})")
    if g[0] != 0 or g[-1] != 0:
        out.append("g must vanish at both table endpoints (decay condition)")
    return out


@dataclass(frozen=True)
class DeformationSpec:
    """A validated truncation shape.

    ``kind`` is one of ``mantegna_stanley``, ``exponential`` or ``tabulated``;
    ``beta`` is the asymmetry coefficient (unused by tabulated specs, whose
    table carries the asymmetry) and ``l`` the spatial scale. ``table`` holds
    ``(xi, g)`` rows for tabulated specs.
    """

    kind: str
    beta: float = 1.0
    l: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.table is not None:
            object.__setattr__(
                self, "table", tuple((float(a), float(b)) for a, b in self.table)
            )
        found = problems(self.kind, self.beta, self.l, self.table)
        if found:
            raise DeformationError(found)

    @property
    def is_symmetric(self) -> bool:
        if self.kind == "tabulated":
            xi = self.breakpoints()
            xi = xi[xi > 0]
            return bool(np.allclose(odd_part(self, xi), 0.0, atol=1e-15))
        return self.beta == 1.0

    def support(self) -> tuple[float, float]:
        """Interval in xi outside which g is zero (or below ``G_FLOOR``)."""
        if self.kind == "mantegna_stanley":
            return -self.beta, 1.0
        if self.kind == "exponential":
            cut = -math.log(G_FLOOR)
            return -cut * self.beta, cut
        return self.table[0][0], self.table[-1][0]

    def breakpoints(self) -> np.ndarray:
        """Points in xi where g or one of its derivatives jumps."""
        if self.kind == "mantegna_stanley":
            return np.array([-self.beta, 1.0])
        if self.kind == "exponential":
            return np.array([0.0])
        return np.array([row[0] for row in self.table])

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "beta": self.beta, "l": self.l}
        if self.table is not None:
            d["table"] = [list(row) for row in self.table]
        return d


def validate(kind: str | None = None, beta: float = 1.0, l: float = 1.0, table=None,
             **extra) -> DeformationSpec:
    """Build a spec from raw fields, raising ``DeformationError`` listing all problems.

    Also accepts a mapping via ``validate(**mapping)``. Unknown keys are
    reported rather than silently dropped.
    """
    found = [f"unknown field {k!r}" for k in extra]
    found += problems(kind, beta, l, table)
    if found:
        raise DeformationError(found)
    return DeformationSpec(kind, float(beta), float(l), table)


def eval_g(spec: DeformationSpec, xi):
    """g(xi) for the spec's family; vectorised over ``xi``."""
    xi = np.asarray(xi, dtype=float)
    if spec.kind == "mantegna_stanley":
        out = ((xi >= -spec.beta) & (xi <= 1.0)).astype(float)
    elif spec.kind == "exponential":
        scale = np.where(xi >= 0, 1.0, spec.beta)
        out = np.exp(-np.abs(xi) / scale)
    else:
        tab = np.asarray(spec.table)
        out = np.interp(xi, tab[:, 0], tab[:, 1], left=0.0, right=0.0)
    return out[()] if out.ndim == 0 else out


def even_part(spec: DeformationSpec, xi):
    xi = np.asarray(xi, dtype=float)
    return 0.5 * (eval_g(spec, xi) + eval_g(spec, -xi))


def odd_part(spec: DeformationSpec, xi):
    xi = np.asarray(xi, dtype=float)
    return 0.5 * (eval_g(spec, xi) - eval_g(spec, -xi))


def load_table_csv(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Read a two-column ``xi,g`` CSV; a non-numeric first row is taken as a header."""
    rows: list[tuple[float, float]] = []
    with open(path, newline="") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) < 2:
                raise DeformationError([f"{path}: row {i + 1} has fewer than 2 columns"])
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise DeformationError([f"{path}: row {i + 1} is not numeric"]) from None
    return tuple(rows)


def from_table_csv(path: str | Path, l: float) -> DeformationSpec:
    return validate("tabulated", 1.0, l, load_table_csv(path))


def tabulate(spec: DeformationSpec, xi: Iterable[float]) -> tuple[tuple[float, float], ...]:
    """Sample a spec onto a table (handy for building tabulated test specs)."""
    xi = np.asarray(list(xi), dtype=float)
    return tuple(zip(xi.tolist(), np.asarray(eval_g(spec, xi)).tolist()))
