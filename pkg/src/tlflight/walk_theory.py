"""Closed-form correlation structure of random walks with i.i.d. increments.

For X(n) = x_1 + ... + x_n every joint cumulant is K_j(n_1..n_j) = kappa_j min(n_i),
so the correlation coefficients R_j = lambda_j min(n_i) / sqrt(prod n_i) depend
on the increment law only through lambda_j.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .cumulants import CumulantSet, StableParams
from .deformation import DeformationSpec

GAUSSIAN_FACTOR = 100.0


class Regime(str, Enum):
    LEVY = "Levy"
    CROSSOVER = "crossover"
    GAUSSIAN = "Gaussian"


def _check_times(times: Sequence[int]) -> None:
    if len(times) < 1:
        raise ValueError("need at least one time")
    if min(times) < 1:
        raise ValueError("all times must be >= 1 (X(0) is deterministic)")


def cumulant_function(cset: CumulantSet, times: Sequence[int]) -> float:
    """K_j(n_1, ..., n_j) = kappa_j min(n_i), with j = len(times)."""
    _check_times(times)
    return cset.kappa_j(len(times)) * min(times)


def one_point_standardized(cset: CumulantSet, n: int, j: int) -> float:
    """Lambda_j(n) = lambda_j / n**(j/2 - 1): standardized cumulant of X(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if j < 3:
        raise ValueError("standardized cumulants start at j = 3")
    return cset.lambda_j(j) * n ** (1.0 - j / 2.0)


def autocorrelation(n1: float, n2: float) -> float:
    _check_times((n1, n2))
    return min(n1, n2) / math.sqrt(n1 * n2)


def anchored_autocorrelation(m: float, tau: float) -> float:
    """R_2 between X(m) and X(m + tau)."""
    if m + tau <= 0:
        raise ValueError("m + tau must be positive")
    r = 1.0 + tau / m
    return math.sqrt(r) if tau < 0 else 1.0 / math.sqrt(r)


def correlation_times(m: float) -> tuple[float, float]:
    """(past, future) half-widths where the anchored autocorrelation drops to 1/2."""
    return 0.75 * m, 3.0 * m


def general_coefficient(lam: CumulantSet | float, times: Sequence[int]) -> float:
    """R_j = lambda_j min(n_i) / sqrt(n_1 ... n_j).

    ``lam`` is either a CumulantSet (lambda_j looked up by j = len(times)) or
    the value of lambda_j itself.
    """
    _check_times(times)
    j = len(times)
    if j < 2:
        raise ValueError("correlation coefficients need j >= 2")
    lj = lam.lambda_j(j) if isinstance(lam, CumulantSet) else float(lam)
    return lj * min(times) / math.sqrt(math.prod(times))


def threefold_region(tau2: float, tau3: float) -> str:
    """Region label of the (tau2, tau3) plane; the third-quadrant diagonal is labelled B."""
    if tau2 >= 0 and tau3 >= 0:
        return "A"
    if tau2 < 0 and tau2 <= tau3:
        return "B"
    return "C"


def threefold_coefficient(lambda3: float, m: float, tau2: float, tau3: float) -> tuple[float, str]:
    """R_3(m, m + tau2, m + tau3) by region, plus the region label.

    Times may be real here (used for isolines) but must stay positive.
    """
    if m < 1:
        raise ValueError("anchor m must be >= 1")
    r2, r3 = 1.0 + tau2 / m, 1.0 + tau3 / m
    if r2 <= 0 or r3 <= 0:
        raise ValueError(f"tau out of domain: m + tau must be positive (tau2={tau2}, tau3={tau3})")
    peak = lambda3 / math.sqrt(m)
    region = threefold_region(tau2, tau3)
    if region == "A":
        return peak / math.sqrt(r2 * r3), region
    if region == "B":
        return peak * math.sqrt(r2 / r3), region
    return peak * math.sqrt(r3 / r2), region


@dataclass(frozen=True)
class IsolinePiece:
    name: str
    equation: str
    tau2_range: tuple[float, float]
    tau3_of: Callable[[float], float]

    def sample(self, k: int = 200, open_ends: bool = False) -> np.ndarray:
        """``k`` points (tau2, tau3) along the piece."""
        a, b = self.tau2_range
        t = np.linspace(a, b, k + 2)[1:-1] if open_ends else np.linspace(a, b, k)
        return np.column_stack([t, [self.tau3_of(v) for v in t]])


@dataclass(frozen=True)
class IsolineDescription:
    m: float
    level: float
    vertices: tuple[tuple[float, float], ...]
    pieces: tuple[IsolinePiece, ...]


def threefold_isoline(m: float, lambda3: float = 1.0) -> IsolineDescription:
    """Half-maximum isoline R_3 = Lambda_3(m)/2 in the (tau2, tau3) plane.

    Two straight segments meet at (-m, -m) and join the hyperbolic arc of
    region A at (0, 3m) and (3m, 0).
    """
    if m < 1:
        raise ValueError("anchor m must be >= 1")
    pieces = (
        IsolinePiece("line_B", "tau3 = 4*tau2 + 3*m", (-m, 0.0), lambda t: 4.0 * t + 3.0 * m),
        IsolinePiece("line_C", "tau3 = (tau2 - 3*m)/4", (-m, 3.0 * m), lambda t: (t - 3.0 * m) / 4.0),
        IsolinePiece("curve_A", "tau3 = 4*m**2/(m + tau2) - m", (0.0, 3.0 * m),
                     lambda t: 4.0 * m * m / (m + t) - m),
    )
    vertices = ((3.0 * m, 0.0), (0.0, 3.0 * m), (-m, -m))
    return IsolineDescription(m, lambda3 / math.sqrt(m) / 2.0, vertices, pieces)


def correlation_surface(lambda3: float, m: float, tau2_values, tau3_values) -> list[tuple]:
    """Rows (tau2, tau3, R3, region) over the grid, skipping points outside the domain."""
    rows = []
    for t2 in tau2_values:
        for t3 in tau3_values:
            if m + t2 <= 0 or m + t3 <= 0:
                continue
            r, reg = threefold_coefficient(lambda3, m, t2, t3)
            rows.append((float(t2), float(t3), r, reg))
    return rows


def write_surface_csv(rows, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["tau2", "tau3", "R3", "region"])
        w.writerows(rows)


def classify_regime(stable: StableParams, spec: DeformationSpec, n: int) -> Regime:
    """Levy for n <= (l/gamma)**alpha, Gaussian for n >= 100 (l/gamma)**alpha, else crossover."""
    if n < 1:
        raise ValueError("n must be >= 1")
    scale = (spec.l / stable.gamma) ** stable.alpha
    if n <= scale:
        return Regime.LEVY
    if n >= GAUSSIAN_FACTOR * scale:
        return Regime.GAUSSIAN
    return Regime.CROSSOVER
