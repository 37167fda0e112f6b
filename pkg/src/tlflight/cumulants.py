"""Analytic cumulants of asymmetrically truncated Levy laws.

The production path is the first-order small-epsilon expansion

    kappa_j = l**(j - alpha) * gamma**alpha * A(alpha) * mu_j(alpha)

with ``mu_j`` the Mellin transform of the even (j even) or odd (j odd) part
of the deformation. ``oracle_cumulants`` is an independent brute-force route
that integrates the exact truncated density instead.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .deformation import DeformationSpec, even_part, odd_part

MAX_ORDER = 8
DEFAULT_ORDER = 6
EPS_WARN = 0.1
# below this |1 - alpha| the alpha = 1 removable singularities use a series
_SERIES_BAND = 1e-4


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, what: str, value: float, abserr: float):
        self.value, self.abserr = value, abserr
        super().__init__(f"{what}: quadrature did not converge "
                         f"(value={value:.6g}, error estimate={abserr:.3g})")


class ExpansionWarning(UserWarning):
    """The small parameter epsilon is too large for the first-order expansion."""


@dataclass(frozen=True)
class StableParams:
    """Symmetric alpha-stable law with characteristic function exp(-(gamma |q|)**alpha)."""

    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def epsilon(self, l: float) -> float:
        return (self.gamma / l) ** self.alpha


@dataclass(frozen=True)
class CumulantSet:
    """Cumulants kappa_1..kappa_J of an increment law plus its standardized coefficients.

    ``kappa[j - 1]`` is kappa_j; ``lam[j - 3]`` is lambda_j = kappa_j / sigma0**j.
    """

    kappa: tuple[float, ...]
    lam: tuple[float, ...]
    sigma0: float
    epsilon: float
    alpha: float = math.nan
    gamma: float = math.nan
    l: float = math.nan
    beta: float = math.nan
    kind: str = ""
    method: str = "expansion"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def max_order(self) -> int:
        return len(self.kappa)

    def kappa_j(self, j: int) -> float:
        if not 1 <= j <= self.max_order:
            raise IndexError(f"kappa_{j} not available (max order {self.max_order})")
        return self.kappa[j - 1]

    def lambda_j(self, j: int) -> float:
        if j == 2:
            return 1.0
        if not 3 <= j <= self.max_order:
            raise IndexError(f"lambda_{j} not available (max order {self.max_order})")
        return self.lam[j - 3]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d["kappa"] = list(self.kappa)
        d["lambda"] = list(d.pop("lam"))
        d["max_order"] = self.max_order
        # arrays start at order 1 (kappa) and 3 (lambda); the maps are keyed by order
        d["kappa_by_order"] = {str(j): v for j, v in enumerate(self.kappa, 1)}
        d["lambda_by_order"] = {str(j): v for j, v in enumerate(self.lam, 3)}
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_kappa(cls, kappa, epsilon=math.nan, **meta) -> "CumulantSet":
        # + 0.0 turns -0.0 (odd orders of symmetric laws) into 0.0
        kappa = tuple(float(k) + 0.0 for k in kappa)
        if len(kappa) < 2:
            raise ValueError("need at least kappa_1 and kappa_2")
        if not kappa[1] > 0:
            raise ArithmeticError(f"kappa_2 = {kappa[1]!r} is not positive")
        sigma0 = math.sqrt(kappa[1])
        lam = tuple(kappa[j - 1] / sigma0**j for j in range(3, len(kappa) + 1))
        return cls(kappa, lam, sigma0, float(epsilon), **meta)


def amplitude_A(alpha: float) -> float:
    """A(alpha) = (2/pi) Gamma(alpha + 1) sin(pi alpha / 2)."""
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return 2.0 / math.pi * math.gamma(alpha + 1.0) * math.sin(math.pi * alpha / 2.0)


def _one_minus_pow_over(s: float, log_beta: float) -> float:
    """(1 - beta**s) / s, finite at s = 0 where it tends to -ln(beta)."""
    if abs(s) < _SERIES_BAND:
        x = s * log_beta
        return -log_beta * (1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0)
    return -math.expm1(s * log_beta) / s


def _closed_form_mu(spec: DeformationSpec, j: int, alpha: float) -> float:
    s = j - alpha
    lb = math.log(spec.beta)
    if spec.kind == "mantegna_stanley":
        if j % 2 == 0:
            return (1.0 + spec.beta**s) / (2.0 * s)
        return 0.5 * _one_minus_pow_over(s, lb)
    # exponential: Gamma(s) (1 -/+ beta**s) / 2, with Gamma(s) = Gamma(1 + s) / s
    if j % 2 == 0:
        return math.gamma(s) * (1.0 + spec.beta**s) / 2.0
    return 0.5 * math.gamma(1.0 + s) * _one_minus_pow_over(s, lb)


def mellin_quadrature(spec: DeformationSpec, j: int, alpha: float,
                      rtol: float = 1e-9) -> tuple[float, float]:
    """Integrate xi**(j-1-alpha) * g_part(xi) over (0, inf) numerically.

    Returns ``(value, abserr)``. When the power is singular at the origin the
    variable is changed to t = xi**p (p = j - alpha, or j - alpha + 1 for an
    odd part that vanishes linearly), which makes the integrand bounded.
    """
    if j < 1:
        raise ValueError("order j must be >= 1")
    part = even_part if j % 2 == 0 else odd_part
    s = j - alpha
    lo, hi = spec.support()
    upper = max(-lo, hi)
    knots = np.abs(spec.breakpoints())
    knots = np.unique(knots[(knots > 0) & (knots < upper)])

    if s >= 1:
        def f(xi):
            return xi ** (s - 1.0) * part(spec, xi)
        a, b, pts = 0.0, upper, knots
        jac = 1.0
    else:
        # odd parts vanish at 0, so xi**(s-1) g_odd = xi**s (g_odd / xi)
        p = s if j % 2 == 0 else s + 1.0
        if p <= 0:
            raise ValueError(f"Mellin integral diverges at the origin (j={j}, alpha={alpha})")
        shift = 0.0 if j % 2 == 0 else 1.0

        def f(t):
            if t <= 0.0:
                t = 1e-300
            xi = t ** (1.0 / p)
            return part(spec, xi) / xi**shift
        a, b, pts = 0.0, upper**p, knots**p
        jac = 1.0 / p

    edges = np.concatenate(([a], pts, [b]))
    total, err = 0.0, 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        if x1 <= x0:
            continue
        val, e, *rest = integrate.quad(f, x0, x1, epsabs=1e-15, epsrel=rtol, limit=400,
                                       full_output=1)
        total += val
        err += e
        if len(rest) > 1 and e > max(1e-13, 10 * rtol * abs(val)):
            raise QuadratureError(f"mu_{j}(alpha={alpha})", total * jac, err * jac)
    return total * jac, err * jac


def influence_mu(spec: DeformationSpec, j: int, alpha: float, rtol: float = 1e-9) -> float:
    """Influence function mu_j(alpha): closed form for built-ins, quadrature otherwise."""
    if j < 1:
        raise ValueError("order j must be >= 1")
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if spec.kind in ("mantegna_stanley", "exponential"):
        return _closed_form_mu(spec, j, alpha)
    return mellin_quadrature(spec, j, alpha, rtol)[0]


def _check_order(J: int) -> None:
    if J < 2:
        raise ValueError("max_order must be at least 2")
    if J > MAX_ORDER:
        raise ValueError(f"orders above {MAX_ORDER} are not supported")


def _warn_eps(eps: float) -> None:
    if eps >= EPS_WARN:
        warnings.warn(f"epsilon = (gamma/l)**alpha = {eps:.3g} is not small; "
                      "the first-order expansion is unreliable", ExpansionWarning, stacklevel=3)


def cumulants(spec: DeformationSpec, stable: StableParams, max_order: int = DEFAULT_ORDER,
              rtol: float = 1e-9) -> CumulantSet:
    """First-order cumulants kappa_1..kappa_J and lambda_3..lambda_J of the increment law."""
    _check_order(max_order)
    a, g, l = stable.alpha, stable.gamma, spec.l
    eps = stable.epsilon(l)
    _warn_eps(eps)
    amp = amplitude_A(a)
    kappa = [l ** (j - a) * g**a * amp * influence_mu(spec, j, a, rtol)
             for j in range(1, max_order + 1)]
    return CumulantSet.from_kappa(kappa, eps, alpha=a, gamma=g, l=l, beta=spec.beta,
                                  kind=spec.kind, method="expansion")


def small_asymmetry_cumulants(kind: str, delta: float, stable: StableParams,
                              l: float) -> CumulantSet:
    """Order-delta cumulants (orders 1..4) for beta = 1 + delta.

    Even orders keep the symmetric influence functions; odd orders are
    linear in delta (-delta/2 for Mantegna-Stanley, -Gamma(j-alpha+1) delta/2
    for the exponential truncation).
    """
    if kind not in ("mantegna_stanley", "exponential"):
        raise ValueError(f"unknown built-in family {kind!r}")
    if abs(delta) > 0.3:
        warnings.warn(f"delta = {delta} is not small; order-delta formulas are unreliable",
                      ExpansionWarning, stacklevel=2)
    a, g = stable.alpha, stable.gamma
    eps = stable.epsilon(l)
    _warn_eps(eps)
    amp = amplitude_A(a)

    def mu(j):
        s = j - a
        if kind == "mantegna_stanley":
            return 1.0 / s if j % 2 == 0 else -delta / 2.0
        return math.gamma(s) if j % 2 == 0 else -math.gamma(s + 1.0) * delta / 2.0

    kappa = [l ** (j - a) * g**a * amp * mu(j) for j in range(1, 5)]
    return CumulantSet.from_kappa(kappa, eps, alpha=a, gamma=g, l=l, beta=1.0 + delta,
                                  kind=kind, method="small_asymmetry")


def moments_to_cumulants(moments) -> list[float]:
    """Raw moments m_1..m_J to cumulants kappa_1..kappa_J."""
    m = [1.0] + [float(v) for v in moments]
    J = len(m) - 1
    if J < 1:
        raise ValueError("need at least one moment")
    k = [0.0] * (J + 1)
    for n in range(1, J + 1):
        k[n] = m[n] - sum(comb(n - 1, i - 1) * k[i] * m[n - i] for i in range(1, n))
    return k[1:]


def cumulants_to_moments(kappas) -> list[float]:
    """Cumulants kappa_1..kappa_J to raw moments m_1..m_J."""
    k = [0.0] + [float(v) for v in kappas]
    J = len(k) - 1
    if J < 1:
        raise ValueError("need at least one cumulant")
    m = [1.0] + [0.0] * J
    for n in range(1, J + 1):
        m[n] = sum(comb(n - 1, i - 1) * k[i] * m[n - i] for i in range(1, n + 1))
    return m[1:]


def oracle_cumulants(spec: DeformationSpec, stable: StableParams,
                     max_order: int = DEFAULT_ORDER, rtol: float = 1e-10) -> CumulantSet:
    """Cumulants of the exact truncated density C P_L(x) g(x/l), no expansion.

    Raw moments are integrated directly and converted with
    ``moments_to_cumulants``.
    """
    from .distribution import truncated_moments

    _check_order(max_order)
    raw, mass = truncated_moments(spec, stable, max_order, rtol=rtol)
    kappa = moments_to_cumulants(raw)
    return CumulantSet.from_kappa(kappa, stable.epsilon(spec.l), alpha=stable.alpha,
                                  gamma=stable.gamma, l=spec.l, beta=spec.beta,
                                  kind=spec.kind, method="oracle",
                                  extra={"retained_mass": mass})
