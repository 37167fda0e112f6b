import json
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tlflight.cumulants import (CumulantSet, ExpansionWarning, StableParams, amplitude_A,
                                cumulants, cumulants_to_moments, influence_mu, mellin_quadrature,
                                moments_to_cumulants, oracle_cumulants, small_asymmetry_cumulants)
from tlflight.deformation import DeformationSpec

CAUCHY = StableParams(1.0, 1.0)
MS, EXP = "mantegna_stanley", "exponential"


def ms_cauchy_exact(l, beta=1.0):
    """Raw moments m_1..m_6 of the Cauchy density restricted to [-beta l, l] (elementary integrals)."""
    def prim(x, k):
        # antiderivative of x**k / (1 + x**2) / pi
        if k == 0:
            return math.atan(x) / math.pi
        if k == 1:
            return math.log1p(x * x) / (2 * math.pi)
        return x ** (k - 1) / ((k - 1) * math.pi) - prim(x, k - 2)
    mass = prim(l, 0) - prim(-beta * l, 0)
    return [(prim(l, k) - prim(-beta * l, k)) / mass for k in range(1, 7)], mass


# -- amplitude and influence functions ------------------------------------------------

def test_amplitude_examples():
    assert amplitude_A(1.0) == pytest.approx(2 / math.pi, rel=1e-15)
    ref = float(2 / mpmath.pi * mpmath.gamma(1.5) * mpmath.sin(mpmath.pi / 4))
    assert amplitude_A(0.5) == pytest.approx(ref, rel=1e-14)
    assert amplitude_A(0.5) == pytest.approx(0.398942, abs=1e-6)
    assert amplitude_A(1e-9) < 1e-8
    for bad in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            amplitude_A(bad)


def test_influence_examples():
    assert influence_mu(DeformationSpec(MS, 1.0), 2, 1.0) == 1.0
    for j in (1, 3, 5):
        assert influence_mu(DeformationSpec(MS, 1.0), j, 0.7) == 0.0
    assert influence_mu(DeformationSpec(EXP, 1.0), 2, 0.5) == pytest.approx(math.gamma(1.5), rel=1e-15)
    assert influence_mu(DeformationSpec(MS, 1.5), 3, 1.0) == pytest.approx(-0.3125, rel=1e-15)
    with pytest.raises(ValueError):
        influence_mu(DeformationSpec(MS, 1.0), 0, 1.0)


@pytest.mark.parametrize("kind", [MS, EXP])
@pytest.mark.parametrize("beta", [1.0, 1.5])
@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0, 1.3, 1.7])
def test_closed_form_matches_quadrature(kind, beta, alpha):
    spec = DeformationSpec(kind, beta)
    for j in range(1, 7):
        closed = influence_mu(spec, j, alpha)
        quad, _ = mellin_quadrature(spec, j, alpha, rtol=1e-10)
        if closed == 0.0:
            assert abs(quad) < 1e-12
        else:
            assert quad == pytest.approx(closed, rel=1e-7)


@pytest.mark.parametrize("kind", [MS, EXP])
def test_removable_singularity_at_alpha_one(kind):
    spec = DeformationSpec(kind, 1.7)
    at_one = influence_mu(spec, 1, 1.0)
    for d in (1e-3, 1e-5, 1e-7, 1e-9):
        for a in (1 - d, 1 + d):
            assert influence_mu(spec, 1, a) == pytest.approx(at_one, rel=5 * d)
    # limit value: -ln(beta)/2 times Gamma(1) for both families
    assert at_one == pytest.approx(-math.log(1.7) / 2, rel=1e-14)


def test_tabulated_tent_matches_derived_mellin():
    # g = 1 + xi/beta on [-beta, 0], 1 - xi on [0, 1]
    beta = 2.0
    spec = DeformationSpec("tabulated", 1.0, 1.0, [(-beta, 0.0), (0.0, 1.0), (1.0, 0.0)])
    for alpha in (0.5, 1.0, 1.5):
        for j in range(1, 7):
            s = j - alpha
            if s <= 0:
                continue
            base = 1 / s - 1 / (s + 1)
            want = base * (1 + beta**s) / 2 if j % 2 == 0 else base * (1 - beta**s) / 2
            assert influence_mu(spec, j, alpha) == pytest.approx(want, rel=1e-8)


# -- cumulants --------------------------------------------------------------------------

def test_truncated_cauchy_variance_and_kurtosis():
    ms = cumulants(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 6)
    ex = cumulants(DeformationSpec(EXP, 1.0, 100.0), CAUCHY, 6)
    assert ms.kappa_j(2) == pytest.approx(200 / math.pi, rel=1e-13)
    assert ex.kappa_j(2) == pytest.approx(200 / math.pi, rel=1e-13)
    assert ms.lambda_j(4) == pytest.approx(math.pi * 100 / 6, rel=1e-13)
    assert ex.lambda_j(4) == pytest.approx(math.pi * 100, rel=1e-13)
    for c in (ms, ex):
        assert c.kappa_j(1) == 0.0 and c.kappa_j(3) == 0.0 and c.kappa_j(5) == 0.0
        assert c.epsilon == pytest.approx(0.01)
        assert c.sigma0 == pytest.approx(math.sqrt(c.kappa_j(2)))


def test_lambda_is_kappa_over_sigma_power():
    c = cumulants(DeformationSpec(EXP, 1.4, 50.0), StableParams(1.3, 2.0), 8)
    for j in range(3, 9):
        assert c.lambda_j(j) == pytest.approx(c.kappa_j(j) / c.sigma0**j, rel=1e-14)
    assert c.lambda_j(2) == 1.0
    with pytest.raises(IndexError):
        c.kappa_j(9)


def test_order_limits_and_warning():
    spec = DeformationSpec(MS, 1.0, 100.0)
    with pytest.raises(ValueError):
        cumulants(spec, CAUCHY, 9)
    with pytest.raises(ValueError):
        cumulants(spec, CAUCHY, 1)
    with pytest.warns(ExpansionWarning):
        cumulants(DeformationSpec(MS, 1.0, 5.0), CAUCHY, 4)


@pytest.mark.parametrize("kind", [MS, EXP])
def test_lambda_epsilon_scaling(kind):
    for alpha in (0.6, 1.0, 1.5):
        st_ = StableParams(alpha)
        ls = np.array([1e2, 1e3, 1e4])
        sets = [cumulants(DeformationSpec(kind, 1.3, l), st_, 6) for l in ls]
        x = np.log(ls**alpha)
        s4 = np.polyfit(x, np.log([c.lambda_j(4) for c in sets]), 1)[0]
        s6 = np.polyfit(x, np.log([c.lambda_j(6) for c in sets]), 1)[0]
        assert abs(s4 - 1) <= 0.01 and abs(s6 - 2) <= 0.01


@given(st.sampled_from([MS, EXP]), st.floats(0.2, 1.9), st.floats(0.3, 3.0), st.floats(10, 1e4))
def test_scale_law(kind, alpha, beta, l):
    st_ = StableParams(alpha)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExpansionWarning)
        c1 = cumulants(DeformationSpec(kind, beta, l), st_, 8)
        c2 = cumulants(DeformationSpec(kind, beta, 2 * l), st_, 8)
    for j in range(1, 9):
        if c1.kappa_j(j) != 0.0:
            assert c2.kappa_j(j) / c1.kappa_j(j) == pytest.approx(2.0 ** (j - alpha), rel=1e-12)


@given(st.floats(0.3, 3.0))
def test_cauchy_ratio_exp_over_ms_is_factorial(beta):
    ms = cumulants(DeformationSpec(MS, beta, 100.0), CAUCHY, 6)
    ex = cumulants(DeformationSpec(EXP, beta, 100.0), CAUCHY, 6)
    for j in range(2, 7):
        if ms.kappa_j(j) != 0.0:
            assert ex.kappa_j(j) / ms.kappa_j(j) == pytest.approx(math.factorial(j - 1), rel=1e-12)
    assert ex.lambda_j(4) / ms.lambda_j(4) == pytest.approx(6.0, rel=1e-13)


# -- small asymmetry --------------------------------------------------------------------

def test_small_asymmetry_examples():
    for a in (0.5, 1.0, 1.5):
        c = small_asymmetry_cumulants(EXP, 0.0, StableParams(a), 1000.0)
        assert c.kappa_j(1) == 0.0 and c.kappa_j(3) == 0.0
    sym = cumulants(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 4)
    ms = small_asymmetry_cumulants(MS, 0.2, CAUCHY, 100.0)
    assert ms.lambda_j(4) == pytest.approx(sym.lambda_j(4), rel=1e-14)
    assert ms.lambda_j(4) == pytest.approx(math.pi * 100 / 6, rel=1e-13)
    ex = small_asymmetry_cumulants(EXP, 0.2, CAUCHY, 100.0)
    assert ex.lambda_j(3) / ms.lambda_j(3) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(ValueError):
        small_asymmetry_cumulants("tabulated", 0.1, CAUCHY, 100.0)
    with pytest.warns(ExpansionWarning):
        small_asymmetry_cumulants(MS, 0.5, CAUCHY, 100.0)


@pytest.mark.parametrize("kind", [MS, EXP])
def test_small_asymmetry_is_first_order_of_general(kind):
    # odd orders: general/linearised -> 1 as delta -> 0, error O(delta)
    for a in (0.7, 1.0, 1.4):
        st_ = StableParams(a)
        for delta in (1e-2, 1e-3):
            lin = small_asymmetry_cumulants(kind, delta, st_, 100.0)
            full = cumulants(DeformationSpec(kind, 1 + delta, 100.0), st_, 4)
            for j in (1, 3):
                assert lin.kappa_j(j) == pytest.approx(full.kappa_j(j), rel=3 * delta)


def test_cauchy_mean_drift_follows_formula_chain():
    # m1 = -gamma delta / pi at alpha = 1 (both families to first order in delta)
    for kind in (MS, EXP):
        c = small_asymmetry_cumulants(kind, 0.1, CAUCHY, 100.0)
        assert c.kappa_j(1) == pytest.approx(-0.1 / math.pi, rel=1e-14)


# -- moments and cumulants ----------------------------------------------------------------

def test_moment_cumulant_examples():
    assert moments_to_cumulants([0, 1, 0, 3]) == pytest.approx([0, 1, 0, 0], abs=1e-15)
    assert moments_to_cumulants([1.5, 4.0])[1] == pytest.approx(4.0 - 1.5**2)
    # Poisson(1): all cumulants 1, raw moments are Bell numbers
    assert moments_to_cumulants([1, 2, 5, 15, 52, 203, 877, 4140]) == pytest.approx([1.0] * 8)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8))
def test_round_trip(ks):
    back = moments_to_cumulants(cumulants_to_moments(ks))
    for a, b in zip(back, ks):
        assert a == pytest.approx(b, rel=1e-10, abs=1e-10 * max(1.0, max(map(abs, ks)) ** 8))


# -- oracle --------------------------------------------------------------------------------

def test_oracle_matches_elementary_integrals_symmetric():
    raw, mass = ms_cauchy_exact(100.0)
    want = moments_to_cumulants(raw)
    orc = oracle_cumulants(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 6)
    assert orc.extra["retained_mass"] == pytest.approx(mass, rel=1e-10)
    for j in (2, 4, 6):
        assert orc.kappa_j(j) == pytest.approx(want[j - 1], rel=1e-8)
    for j in (1, 3, 5):
        assert abs(orc.kappa_j(j)) < 1e-8 * orc.kappa_j(j + 1) ** (j / (j + 1))
    # frozen: 2 l / pi corrected at order epsilon
    assert orc.kappa_j(2) == pytest.approx(63.06984494, rel=1e-9)
    assert orc.kappa_j(2) == pytest.approx(200 / math.pi, rel=0.02)


def test_oracle_matches_elementary_integrals_asymmetric():
    raw, _ = ms_cauchy_exact(100.0, beta=1.2)
    want = moments_to_cumulants(raw)
    orc = oracle_cumulants(DeformationSpec(MS, 1.2, 100.0), CAUCHY, 4)
    for j in range(1, 5):
        assert orc.kappa_j(j) == pytest.approx(want[j - 1], rel=1e-8)
    eng = cumulants(DeformationSpec(MS, 1.2, 100.0), CAUCHY, 4)
    assert eng.kappa_j(1) == pytest.approx(orc.kappa_j(1), rel=0.02)
    assert eng.kappa_j(1) < 0


@pytest.mark.parametrize("kind", [MS, EXP])
def test_oracle_agreement_improves_with_l(kind):
    errs = []
    for l in (100.0, 1000.0):
        spec = DeformationSpec(kind, 1.3, l)
        e = cumulants(spec, CAUCHY, 4)
        o = oracle_cumulants(spec, CAUCHY, 4)
        errs.append(max(abs(e.kappa_j(j) / o.kappa_j(j) - 1) for j in (2, 3, 4)))
    assert errs[1] < errs[0] < 0.1


def test_oracle_non_cauchy_alpha():
    spec = DeformationSpec(EXP, 1.0, 200.0)
    st_ = StableParams(1.5)
    e = cumulants(spec, st_, 4)
    o = oracle_cumulants(spec, st_, 4)
    assert o.kappa_j(2) == pytest.approx(e.kappa_j(2), rel=3 * st_.epsilon(200.0) ** 0.5)
    assert abs(o.kappa_j(1)) < 1e-9 * o.sigma0


# -- serialization ----------------------------------------------------------------------------

def test_json_schema():
    c = cumulants(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 4)
    d = json.loads(c.to_json())
    for key in ("alpha", "gamma", "l", "beta", "epsilon", "kappa", "lambda", "method"):
        assert key in d
    assert d["method"] == "expansion"
    assert d["kappa"][1] == pytest.approx(63.662, abs=1e-3)
    assert d["kappa_by_order"]["2"] == d["kappa"][1]
    assert d["lambda_by_order"]["4"] == d["lambda"][1]


def test_from_kappa_rejects_nonpositive_variance():
    with pytest.raises(ArithmeticError):
        CumulantSet.from_kappa([0.0, -1.0])
