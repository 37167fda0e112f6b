"""Densities of the symmetric stable law and of its truncated deformation.

The stable density is the Fourier cosine integral

    P_L(x) = (1/pi) int_0^inf cos(q x) exp(-(gamma q)**alpha) dq.

Pointwise it is evaluated from whichever representation is accurate at that
point: the origin Taylor series for small |x|, the large-|x| series in the
tails (both only when converged to round-off), and otherwise Zolotarev's
non-oscillatory integral over an angle in [0, pi/2], which is equivalent to
the cosine integral but avoids its slowly decaying oscillations.
alpha = 1 is the Cauchy law and is evaluated in closed form.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .cumulants import QuadratureError, StableParams
from .deformation import DeformationSpec, eval_g

DEFAULT_RTOL = 1e-9
_SERIES_TERMS = 60
_SERIES_ACCEPT = 1e-16
_ORIGIN_RADIUS = 0.2
# 0 < |alpha - 1| below this is treated as Cauchy-like: see _near_cauchy
_NEAR_ONE = 1e-3


class DivergentIntegralError(ArithmeticError):
    """A first-order integral diverges for this deformation and alpha."""


def _is_cauchy(stable: StableParams) -> bool:
    return stable.alpha == 1.0


def tail_series(stable: StableParams, x, terms: int = 1):
    """Large-|x| series of the stable density, truncated after ``terms`` terms.

    ``terms=1`` is the leading power-law tail
    (1/pi) sin(pi alpha/2) Gamma(1+alpha) gamma**alpha |x|**(-alpha-1).
    The series converges for alpha < 1 and is asymptotic for alpha > 1.
    """
    x = np.abs(np.asarray(x, dtype=float))
    a, g = stable.alpha, stable.gamma
    out = np.zeros_like(x)
    for k in range(1, terms + 1):
        c = (-1) ** (k + 1) * math.gamma(k * a + 1) / math.factorial(k) * math.sin(k * math.pi * a / 2)
        out = out + c * g ** (k * a) * x ** (-k * a - 1)
    out /= math.pi
    return out[()] if out.ndim == 0 else out


def _sum_series(log_mag, sign, n_terms: int = _SERIES_TERMS) -> float | None:
    """Sum sign(k) exp(log_mag(k)) for k = 0, 1, ... or None if not converged.

    Accepts only once a term falls below round-off of the partial sum; gives
    up as soon as magnitudes grow (asymptotic series past their best point).
    """
    total, prev = 0.0, math.inf
    for k in range(n_terms):
        lm = log_mag(k)
        mag = math.exp(lm) if lm > -745 else 0.0
        if mag > prev and k > 2:
            return None
        total += sign(k) * mag
        if mag <= _SERIES_ACCEPT * abs(total):
            return total
        prev = mag
    return None


def _tail_pdf(a: float, y: float) -> float | None:
    # standardized (gamma = 1) density for large y
    ly = math.log(y)
    s = _sum_series(lambda k: math.lgamma((k + 1) * a + 1) - math.lgamma(k + 2) - (k + 1) * a * ly,
                    lambda k: (-1) ** k * math.sin((k + 1) * math.pi * a / 2))
    return None if s is None else s / (math.pi * y)


def _tail_sf(a: float, y: float) -> float | None:
    ly = math.log(y)
    s = _sum_series(lambda k: (math.lgamma((k + 1) * a + 1) - math.lgamma(k + 2)
                               - math.log((k + 1) * a) - (k + 1) * a * ly),
                    lambda k: (-1) ** k * math.sin((k + 1) * math.pi * a / 2))
    return None if s is None else s / math.pi


def _origin_pdf(a: float, y: float) -> float | None:
    ly = math.log(y)
    s = _sum_series(lambda k: math.lgamma((2 * k + 1) / a) - math.lgamma(2 * k + 1) + 2 * k * ly,
                    lambda k: (-1) ** k)
    return None if s is None else s / (math.pi * a)


def _origin_cdf(a: float, y: float) -> float | None:
    """int_0^y of the standardized density."""
    ly = math.log(y)
    s = _sum_series(lambda k: math.lgamma((2 * k + 1) / a) - math.lgamma(2 * k + 2) + (2 * k + 1) * ly,
                    lambda k: (-1) ** k)
    return None if s is None else s / (math.pi * a)


def _zolotarev(a: float, y: float, rtol: float, kernel: str) -> float:
    """Angular integral int_0^{pi/2} K(G(theta)) d theta with
    G = y**(a/(a-1)) V(theta),  V = (cos t / sin(a t))**(a/(a-1)) cos((a-1) t) / cos t.

    kernel "pdf": K = G exp(-G); "sf": K = exp(-G) for a > 1, 1 - exp(-G) for a < 1.
    """
    e = a / (a - 1.0)
    ly = e * math.log(y)

    def log_g(t):
        c = math.cos(t)
        return ly + e * (math.log(c) - math.log(math.sin(a * t))) + math.log(math.cos((a - 1.0) * t)) - math.log(c)

    if kernel == "pdf":
        def k(t):
            lg = log_g(t)
            return 0.0 if lg > 6.6 or lg < -745 else math.exp(lg - math.exp(lg))
    elif a > 1:
        def k(t):
            lg = log_g(t)
            return 0.0 if lg > 6.6 else math.exp(-math.exp(lg)) if lg > -745 else 1.0
    else:
        def k(t):
            lg = log_g(t)
            return 1.0 if lg > 6.6 else -math.expm1(-math.exp(lg)) if lg > -745 else 0.0

    lo, hi = 1e-300, math.pi / 2 - 1e-15
    # G is monotone in theta; split at G = 1 where the pdf kernel peaks
    grid = np.linspace(lo, hi, 129)
    lgs = np.array([log_g(t) for t in grid])
    i = int(np.argmin(np.abs(lgs)))
    pts = [lo, float(grid[i]), hi] if 0 < i < len(grid) - 1 else [lo, hi]
    total = err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for u, v in zip(pts[:-1], pts[1:]):
            val, e_ = integrate.quad(k, u, v, epsabs=0.0, epsrel=min(rtol, 1e-10), limit=200)
            total += val
            err += e_
    if not math.isfinite(total) or err > max(rtol, 1e-8) * abs(total) + 1e-300:
        raise QuadratureError("Zolotarev integral", total, err)
    return total


def _cauchy_like(a: float) -> bool:
    return abs(a - 1.0) < _NEAR_ONE


def _fourier_pdf(a: float, y: float, rtol: float) -> float:
    """Direct cosine integral for alpha very close to 1 (the angular form is ill-conditioned)."""
    f = lambda q: math.cos(q * y) * math.exp(-(q ** a))
    qmax = 745.0 ** (1.0 / a)
    period = 2 * math.pi / y
    edges = np.arange(0.0, qmax + period, period)
    parts = [integrate.quad(f, u, v, epsabs=0.0, epsrel=rtol, limit=100)[0]
             for u, v in zip(edges[:-1], edges[1:])]
    return math.fsum(parts) / math.pi


def _fourier_sf(a: float, y: float, rtol: float) -> float:
    f = lambda q: (math.sin(q * y) / q if q > 0 else y) * math.exp(-(q ** a))
    qmax = 745.0 ** (1.0 / a)
    period = 2 * math.pi / y
    edges = np.arange(0.0, qmax + period, period)
    parts = [integrate.quad(f, u, v, epsabs=0.0, epsrel=rtol, limit=100)[0]
             for u, v in zip(edges[:-1], edges[1:])]
    return 0.5 - math.fsum(parts) / math.pi


def _std_pdf(a: float, y: float, rtol: float) -> float:
    """Standardized (gamma = 1) density at y >= 0."""
    if y == 0.0:
        return math.gamma(1.0 + 1.0 / a) / math.pi
    if y < _ORIGIN_RADIUS:
        val = _origin_pdf(a, y)
        if val is not None:
            return val
    if y > 1.0:
        val = _tail_pdf(a, y)
        if val is not None:
            return val
    if _cauchy_like(a):
        return _fourier_pdf(a, y, rtol)
    return a / (math.pi * abs(a - 1.0) * y) * _zolotarev(a, y, rtol, "pdf")


def _std_sf(a: float, y: float, rtol: float) -> float:
    """Standardized P(X > y) for y >= 0."""
    if y == 0.0:
        return 0.5
    if y < _ORIGIN_RADIUS:
        val = _origin_cdf(a, y)
        if val is not None:
            return 0.5 - val
    if y > 1.0:
        val = _tail_sf(a, y)
        if val is not None:
            return val
    if _cauchy_like(a):
        return _fourier_sf(a, y, rtol)
    return _zolotarev(a, y, rtol, "sf") / math.pi


def stable_pdf(stable: StableParams, x, rtol: float = DEFAULT_RTOL):
    """Symmetric alpha-stable density P_L(x); vectorised over ``x``."""
    xs = np.asarray(x, dtype=float)
    g = stable.gamma
    if _is_cauchy(stable):
        out = g / (math.pi * (xs * xs + g * g))
    else:
        a = stable.alpha
        out = np.fromiter((_std_pdf(a, abs(float(v)) / g, rtol) / g for v in xs.ravel()),
                          float, xs.size).reshape(xs.shape)
    return out[()] if out.ndim == 0 else out


def stable_sf(stable: StableParams, x, rtol: float = DEFAULT_RTOL):
    """Survival function P(X > x) of the symmetric stable law."""
    xs = np.asarray(x, dtype=float)
    g = stable.gamma
    if _is_cauchy(stable):
        out = 0.5 - np.arctan(xs / g) / math.pi
    else:
        a = stable.alpha
        vals = []
        for v in xs.ravel():
            s = _std_sf(a, abs(float(v)) / g, rtol)
            vals.append(s if v >= 0 else 1.0 - s)
        out = np.array(vals).reshape(xs.shape)
    return out[()] if out.ndim == 0 else out


def stable_cdf(stable: StableParams, x, rtol: float = DEFAULT_RTOL):
    return 1.0 - stable_sf(stable, x, rtol)


# -- truncated law ---------------------------------------------------------

def _segments(spec: DeformationSpec, stable: StableParams) -> np.ndarray:
    """Integration edges in x covering the support, refined near the stable core."""
    lo, hi = spec.support()
    lo, hi = lo * spec.l, hi * spec.l
    pts = list(spec.breakpoints() * spec.l)
    core = [c * stable.gamma for c in (-30, -4, -1, 0, 1, 4, 30)]
    pts += core
    pts = sorted({p for p in pts if lo < p < hi})
    return np.array([lo] + pts + [hi])


def truncated_moments(spec: DeformationSpec, stable: StableParams, max_order: int,
                      rtol: float = 1e-10) -> tuple[list[float], float]:
    """Raw moments m_1..m_J of C P_L(x) g(x/l) and the retained mass 1/C.

    Integrates (x/l)**j P_L(x) g(x/l) for all j at once so every component
    has comparable size.
    """
    l = spec.l
    powers = np.arange(max_order + 1)

    def f(x):
        return (x / l) ** powers * (float(stable_pdf(stable, x)) * float(eval_g(spec, x / l)))

    edges = _segments(spec, stable)
    acc = np.zeros(max_order + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad_vec(f, a, b, epsrel=rtol, epsabs=1e-16, norm="max", limit=2000)
        if not np.all(np.isfinite(val)) or err > 1e-6 * max(1.0, np.max(np.abs(val))):
            raise QuadratureError(f"moments on [{a:.4g}, {b:.4g}]", float(val[0]), float(err))
        acc += val
    mass = acc[0]
    raw = [acc[j] / mass * l**j for j in range(1, max_order + 1)]
    return raw, mass


def removed_mass(spec: DeformationSpec, stable: StableParams, rtol: float = DEFAULT_RTOL) -> float:
    """Exact probability int P_L(x) (1 - g(x/l)) dx discarded by the truncation."""
    edges = _segments(spec, stable)
    lo, hi = edges[0], edges[-1]
    total = float(stable_sf(stable, hi, rtol)) + float(stable_sf(stable, -lo, rtol))
    h = lambda x: float(stable_pdf(stable, x, rtol)) * (1.0 - float(eval_g(spec, x / spec.l)))
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        if eval_g(spec, np.array([a, mid, b]) / spec.l).min() >= 1.0:
            continue
        val, err = integrate.quad(h, a, b, epsrel=rtol, epsabs=1e-15, limit=400)
        total += val
    return total


def normalization_C(spec: DeformationSpec, stable: StableParams, rtol: float = DEFAULT_RTOL) -> float:
    """C = 1 / int P_L(x) g(x/l) dx."""
    w = removed_mass(spec, stable, rtol)
    if not 0 <= w < 1:
        raise QuadratureError("normalization", 1.0 - w, math.nan)
    return 1.0 / (1.0 - w)


def truncated_pdf(spec: DeformationSpec, stable: StableParams, x, C: float | None = None):
    """Density C P_L(x) g(x/l). Pass ``C`` to skip recomputing the normalization."""
    if C is None:
        C = normalization_C(spec, stable)
    x = np.asarray(x, dtype=float)
    return C * stable_pdf(stable, x) * eval_g(spec, x / spec.l)


def _origin_order(spec: DeformationSpec) -> float:
    """Power p with 1 - g_even(xi) ~ xi**p at the origin (inf when g is flat there)."""
    if spec.kind == "mantegna_stanley":
        return math.inf
    if spec.kind == "exponential":
        return 1.0
    probe = np.array([1e-9, -1e-9])
    return math.inf if np.all(eval_g(spec, probe) == 1.0) else 1.0


def tail_mass_b(spec: DeformationSpec, stable: StableParams, method: str = "expansion",
                rtol: float = DEFAULT_RTOL) -> float:
    """Probability removed by the truncation.

    ``method="expansion"`` integrates the leading power-law tail of P_L against
    1 - g (first order in epsilon); it diverges when 1 - g vanishes only
    linearly at the origin and alpha >= 1, which raises
    ``DivergentIntegralError``. ``method="exact"`` uses the full stable
    density (see ``removed_mass``).
    """
    if method == "exact":
        b = removed_mass(spec, stable, rtol)
    elif method == "expansion":
        a = stable.alpha
        if _origin_order(spec) <= a:
            raise DivergentIntegralError(
                f"first-order tail mass diverges: 1 - g vanishes only linearly at the "
                f"origin for {spec.kind!r} and alpha = {a} >= 1")
        b = stable.epsilon(spec.l) / math.pi * math.sin(math.pi * a / 2) * math.gamma(1 + a) \
            * _tail_pairing(spec, a, rtol)
    else:
        raise ValueError(f"unknown method {method!r}")
    if b > 0.5:
        warnings.warn(f"removed mass b = {b:.3g} > 0.5: the expansion has broken down",
                      stacklevel=2)
    return b


def _tail_pairing(spec: DeformationSpec, a: float, rtol: float) -> float:
    """int |xi|**(-a-1) (1 - g(xi)) dxi over the real line."""
    lo, hi = spec.support()
    total = 0.0
    for sign, edge in ((1.0, hi), (-1.0, -lo)):
        # beyond the support 1 - g = 1
        total += edge ** (-a) / a
        knots = np.abs(spec.breakpoints())
        knots = np.unique(knots[(knots > 0) & (knots < edge)])
        f = lambda u: u ** (-a - 1) * (1.0 - float(eval_g(spec, sign * u))) if u > 0 else 0.0
        pts = np.concatenate(([0.0], knots, [edge]))
        for u0, u1 in zip(pts[:-1], pts[1:]):
            val, err, *rest = integrate.quad(f, u0, u1, epsrel=rtol, epsabs=1e-15,
                                             limit=400, full_output=1)
            if len(rest) > 1 and err > 1e-8 * max(abs(val), 1e-12):
                raise QuadratureError("tail pairing", val, err)
            total += val
    return total


def levy_regime_pdf(spec: DeformationSpec, stable: StableParams, n: int, x):
    """Lévy-regime one-point density of the walk after n steps.

    n**(-1/alpha) P_L(x n**(-1/alpha)) g(x/l): the self-similar stable
    propagator modulated by the deformation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > (spec.l / stable.gamma) ** stable.alpha:
        warnings.warn("n exceeds (l/gamma)**alpha: outside the Levy regime", stacklevel=2)
    x = np.asarray(x, dtype=float)
    s = n ** (-1.0 / stable.alpha)
    return s * stable_pdf(stable, x * s) * eval_g(spec, x / spec.l)


def return_probability(stable: StableParams, n: int) -> float:
    """Gamma(1/alpha) / (pi alpha gamma n**(1/alpha))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = stable.alpha
    return math.gamma(1.0 / a) / (math.pi * a * stable.gamma * n ** (1.0 / a))


@dataclass(frozen=True)
class DensityGrid:
    x: np.ndarray
    p: np.ndarray
    C: float

    def __post_init__(self):
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("grid abscissae must be strictly increasing")
        if np.any(self.p < 0):
            raise ValueError("density values must be non-negative")

    def integral(self) -> float:
        return float(integrate.trapezoid(self.p, self.x))

    def is_normalized(self, tol: float = 1e-3) -> bool:
        return abs(self.integral() - 1.0) <= tol

    def to_csv(self, path: str | Path, header_lines: tuple[str, ...] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "p"])
            w.writerows(zip(self.x.tolist(), self.p.tolist()))


def density_grid(spec: DeformationSpec, stable: StableParams, x) -> DensityGrid:
    x = np.asarray(x, dtype=float)
    C = normalization_C(spec, stable)
    return DensityGrid(x, truncated_pdf(spec, stable, x, C), C)
