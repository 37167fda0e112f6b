"""Monte Carlo estimates of cumulants and correlation coefficients from walk ensembles.

Standard errors come from a nonparametric bootstrap over realizations (rows
of the ensemble), never over time points. Joint cumulants use plug-in
moment combinations, so they carry an O(1/M) bias.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import walk_theory
from .cumulants import CumulantSet
from .sampler import WalkEnsemble

DEFAULT_BOOT = 200
# bootstrap seeds are the ensemble seed plus this offset
BOOT_SEED_OFFSET = 0x5EED


def _boot_rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def ensemble_boot_seed(ensemble: WalkEnsemble) -> int:
    return (ensemble.seed + BOOT_SEED_OFFSET) % 2**64


# -- one-sample k-statistics -------------------------------------------------

def _kstats(x: np.ndarray, order: int) -> np.ndarray:
    """Unbiased k-statistics k_1..k_order (order <= 4) of each row of ``x``."""
    x = np.atleast_2d(x)
    n = x.shape[-1]
    mean = x.mean(axis=-1, keepdims=True)
    d = x - mean
    s2 = np.einsum("...i,...i->...", d, d)
    out = [mean[..., 0]]
    if order >= 2:
        out.append(s2 / (n - 1))
    if order >= 3:
        d2 = d * d
        s3 = np.einsum("...i,...i->...", d2, d)
        out.append(n * s3 / ((n - 1) * (n - 2)))
    if order >= 4:
        s4 = np.einsum("...i,...i->...", d2, d2)
        out.append(n * ((n + 1) * n * s4 - 3 * (n - 1) * s2 * s2)
                   / (n * (n - 1) * (n - 2) * (n - 3)))
    return np.array(out)


@dataclass(frozen=True)
class SampleCumulants:
    k: tuple[float, ...]
    se: tuple[float, ...]
    n: int

    def standardized(self, j: int) -> float:
        return self.k[j - 1] / self.k[1] ** (j / 2)


def sample_cumulants(sample, max_order: int = 4, n_boot: int = DEFAULT_BOOT,
                     seed: int | None = 0) -> SampleCumulants:
    """k-statistics k_1..k_max_order with bootstrap standard errors."""
    x = np.asarray(sample, dtype=float).ravel()
    if not 1 <= max_order <= 4:
        raise ValueError("max_order must be between 1 and 4")
    min_n = 10 if max_order == 4 else max_order + 1
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} values for order {max_order}")
    if np.ptp(x) == 0:
        raise ValueError("zero variance: sample is constant")
    k = _kstats(x, max_order)[:, 0]
    rng = _boot_rng(seed)
    boots = np.empty((n_boot, max_order))
    for b in range(n_boot):
        boots[b] = _kstats(x[rng.integers(0, x.size, x.size)], max_order)[:, 0]
    se = boots.std(axis=0, ddof=1)
    return SampleCumulants(tuple(k.tolist()), tuple(se.tolist()), x.size)


# -- joint cumulants -----------------------------------------------------------

def _plugin_joint(cols: np.ndarray) -> float:
    """Plug-in joint cumulant of the columns of ``cols`` (shape M x j, j <= 4)."""
    j = cols.shape[1]
    if j == 1:
        return float(cols[:, 0].mean())
    c = cols - cols.mean(axis=0)
    if j == 2:
        return float(np.mean(c[:, 0] * c[:, 1]))
    if j == 3:
        return float(np.mean(c[:, 0] * c[:, 1] * c[:, 2]))
    e = lambda a, b: np.mean(c[:, a] * c[:, b])
    return float(np.mean(c[:, 0] * c[:, 1] * c[:, 2] * c[:, 3])
                 - e(0, 1) * e(2, 3) - e(0, 2) * e(1, 3) - e(0, 3) * e(1, 2))


def _bootstrap(stat, cols: np.ndarray, rng: np.random.Generator, n_boot: int) -> np.ndarray:
    M = cols.shape[0]
    return np.array([stat(cols[rng.integers(0, M, M)]) for _ in range(n_boot)])


def _columns(ensemble: WalkEnsemble, times: Sequence[int]) -> np.ndarray:
    if not 1 <= len(times) <= 4:
        raise ValueError("joint cumulants are implemented for 1 <= j <= 4")
    for n in times:
        if not 1 <= n <= ensemble.N:
            raise ValueError(f"time {n} outside 1..{ensemble.N}")
    return np.column_stack([ensemble.at(n) for n in times])


@dataclass(frozen=True)
class JointCumulantEstimate:
    times: tuple[int, ...]
    value: float
    std_error: float
    M: int


def joint_cumulant(ensemble: WalkEnsemble, times: Sequence[int], n_boot: int = DEFAULT_BOOT,
                   seed: int | None = None) -> JointCumulantEstimate:
    """Ensemble estimate of K_j(n_1, ..., n_j) with a bootstrap standard error."""
    cols = _columns(ensemble, times)
    if ensemble.M < 100:
        warnings.warn("fewer than 100 realizations: joint cumulant estimates are unreliable",
                      stacklevel=2)
    rng = _boot_rng(ensemble_boot_seed(ensemble) if seed is None else seed)
    est = _plugin_joint(cols)
    se = float(_bootstrap(_plugin_joint, cols, rng, n_boot).std(ddof=1))
    return JointCumulantEstimate(tuple(int(t) for t in times), est, se, ensemble.M)


def _plugin_R(cols: np.ndarray) -> float:
    sd = cols.std(axis=0)
    return _plugin_joint(cols) / float(np.prod(sd))


@dataclass(frozen=True)
class CorrelationReport:
    times: tuple[int, ...]
    theory: float
    empirical: float
    std_error: float
    z_score: float
    M_used: int

    @property
    def order(self) -> int:
        return len(self.times)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = list(self.times)
        d["order"] = self.order
        return d


def _z(empirical: float, theory: float, se: float) -> float:
    diff = empirical - theory
    scale = 1e-12 * max(1.0, abs(empirical))
    if se > scale:
        return diff / se
    # a rounding-level bootstrap spread only happens for identities such as R_2(n, n) = 1
    return 0.0 if abs(diff) < scale else math.copysign(math.inf, diff)


def correlation_coefficient(ensemble: WalkEnsemble, times: Sequence[int],
                            cumulants: CumulantSet | None = None, n_boot: int = DEFAULT_BOOT,
                            seed: int | None = None) -> CorrelationReport:
    """Empirical R_j = K_j / prod sigma(n_i) against the closed-form value.

    j = 2 needs no cumulants; for j >= 3 the theory uses ``cumulants.lambda_j``
    (NaN theory if no cumulant set is supplied).
    """
    times = tuple(int(t) for t in times)
    if len(times) < 2:
        raise ValueError("correlation coefficients need at least two times")
    cols = _columns(ensemble, times)
    rng = _boot_rng(ensemble_boot_seed(ensemble) if seed is None else seed)
    emp = _plugin_R(cols)
    se = float(_bootstrap(_plugin_R, cols, rng, n_boot).std(ddof=1))
    if len(times) == 2:
        theory = walk_theory.general_coefficient(1.0, times)
    elif cumulants is not None:
        theory = walk_theory.general_coefficient(cumulants, times)
    else:
        theory = math.nan
    return CorrelationReport(times, theory, emp, se, _z(emp, theory, se), ensemble.M)


# -- CLT scan ------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class CLTScan:
    n: tuple[int, ...]
    lambda3: tuple[float, ...]
    lambda4: tuple[float, ...]
    se3: tuple[float, ...]
    se4: tuple[float, ...]
    slope3: SlopeFit
    slope4: SlopeFit
    warnings: tuple[str, ...] = ()

    def rows(self) -> list[tuple]:
        return list(zip(self.n, self.lambda3, self.se3, self.lambda4, self.se4))


def _standardized(xcols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = _kstats(xcols, 4)
    return k[2] / k[1] ** 1.5, k[3] / k[1] ** 2


def _loglog_slope(n: np.ndarray, y: np.ndarray) -> float:
    y = np.abs(y)
    ok = y > 0
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(n[ok]), np.log(y[ok]), 1)[0])


def clt_convergence_scan(ensemble: WalkEnsemble, n_values: Sequence[int] | None = None,
                         n_boot: int = DEFAULT_BOOT, seed: int | None = None,
                         level: float = 0.95) -> CLTScan:
    """Standardized cumulants of X(n) at log-spaced n with log-log slope fits.

    Slopes are least-squares fits of log|Lambda_j(n)| on log n; their
    confidence intervals are bootstrap percentiles over realizations.
    """
    if n_values is None:
        if ensemble.N < 32:
            raise ValueError("the CLT scan needs N >= 32")
        n_values = [2**i for i in range(int(math.log2(ensemble.N)) + 1)]
    n = np.asarray(n_values, dtype=int)
    notes = []
    if ensemble.M < 10_000:
        notes.append(f"only M={ensemble.M} realizations (>= 10^4 recommended); "
                     "confidence intervals are wide")
    X = np.stack([ensemble.at(int(v)) for v in n])
    l3, l4 = _standardized(X)
    rng = _boot_rng(ensemble_boot_seed(ensemble) if seed is None else seed)
    b3 = np.empty((n_boot, n.size))
    b4 = np.empty((n_boot, n.size))
    s3 = np.empty(n_boot)
    s4 = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, ensemble.M, ensemble.M)
        b3[b], b4[b] = _standardized(X[:, idx])
        s3[b] = _loglog_slope(n, b3[b])
        s4[b] = _loglog_slope(n, b4[b])
    q = [(1 - level) / 2 * 100, (1 + level) / 2 * 100]

    def fit(y, sb):
        lo, hi = np.nanpercentile(sb, q)
        return SlopeFit(_loglog_slope(n, y), float(lo), float(hi))

    return CLTScan(tuple(n.tolist()), tuple(l3.tolist()), tuple(l4.tolist()),
                   tuple(b3.std(axis=0, ddof=1).tolist()), tuple(b4.std(axis=0, ddof=1).tolist()),
                   fit(l3, s3), fit(l4, s4), tuple(notes))


# -- serialization -------------------------------------------------------------

def reports_to_json(reports: Sequence[CorrelationReport], path: str | Path, meta: dict | None = None) -> None:
    doc = dict(meta or {})
    doc["reports"] = [r.to_dict() for r in reports]
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))


def reports_to_csv(reports: Sequence[CorrelationReport], path: str | Path,
                   header_lines: tuple[str, ...] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["order", "times", "theory", "empirical", "std_error", "z_score", "M_used"])
        for r in reports:
            w.writerow([r.order, " ".join(map(str, r.times)), r.theory, r.empirical,
                        r.std_error, r.z_score, r.M_used])
