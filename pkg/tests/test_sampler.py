import math
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from tlflight.cumulants import StableParams, cumulants
from tlflight.deformation import DeformationSpec, eval_g
from tlflight.distribution import stable_sf, tail_mass_b
from tlflight.sampler import (MAGIC, SamplingError, WalkEnsemble, generate_walks, rejection_sample,
                              sample_stable, sample_truncated, walk_rng)

CAUCHY = StableParams(1.0, 1.0)
MS = "mantegna_stanley"


def test_cauchy_median_and_quartiles():
    x = sample_stable(CAUCHY, np.random.default_rng(11), 1_000_000)
    assert abs(np.median(x)) < 3 * (math.pi / 2) / 1000
    frac = np.mean(np.abs(x) > 1.0)
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / x.size)


@pytest.mark.parametrize("alpha,gamma", [(1.5, 1.0), (0.7, 2.0)])
def test_stable_chi_square(alpha, gamma):
    s = StableParams(alpha, gamma)
    x = sample_stable(s, np.random.default_rng(12), 200_000)
    edges = np.concatenate(([-np.inf], np.linspace(-8, 8, 41) * gamma, [np.inf]))
    sf = np.array([1.0 if e == -np.inf else 0.0 if e == np.inf else float(stable_sf(s, e))
                   for e in edges])
    expected = -np.diff(sf) * x.size
    observed = np.histogram(x, edges)[0]
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_untruncated_limit_accepts_everything():
    _, attempts = sample_truncated(DeformationSpec(MS, 1.0, 1e15), CAUCHY,
                                   np.random.default_rng(0), 100_000)
    assert attempts == 100_000


def test_truncated_mean_and_acceptance():
    spec = DeformationSpec(MS, 1.0, 100.0)
    draws = 1_000_000
    x, attempts = sample_truncated(spec, CAUCHY, np.random.default_rng(13), draws)
    assert np.all(np.abs(x) <= 100.0)
    assert abs(x.mean()) < 3 * x.std() / math.sqrt(draws)
    acc = draws / attempts
    b = tail_mass_b(spec, CAUCHY)
    assert abs(acc - (1 - b)) < 3 * math.sqrt(acc * (1 - acc) / attempts)


def test_rejection_is_exact_on_discrete_case():
    # five-point proposal thinned by a tabulated g: target is p*g / sum(p*g)
    support = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    p = np.array([0.1, 0.3, 0.2, 0.25, 0.15])
    spec = DeformationSpec("tabulated", 1.0, 1.0,
                           [(-3.0, 0.0), (-2.0, 0.2), (-1.0, 0.9), (0.0, 1.0), (1.0, 0.5),
                            (2.0, 0.35), (3.0, 0.0)])
    target = p * eval_g(spec, support)
    target /= target.sum()
    n = 400_000
    x, _ = rejection_sample(lambda r, k: r.choice(support, size=k, p=p),
                            lambda v: eval_g(spec, v), np.random.default_rng(14), n)
    freq = np.array([(x == v).mean() for v in support])
    se = np.sqrt(target * (1 - target) / n)
    assert np.all(np.abs(freq - target) < 3 * se)


def test_consecutive_rejection_abort():
    with pytest.raises(SamplingError):
        rejection_sample(lambda r, k: r.random(k), lambda v: np.zeros_like(v),
                         np.random.default_rng(0), 5)


def test_generate_walks_deterministic():
    spec = DeformationSpec(MS, 1.0, 100.0)
    a = generate_walks(spec, CAUCHY, 2, 5, 7)
    b = generate_walks(spec, CAUCHY, 2, 5, 7)
    assert np.array_equal(a.values, b.values) and a.digest() == b.digest()
    c = generate_walks(spec, CAUCHY, 2, 5, 8)
    assert not np.array_equal(a.values, c.values)


def test_walks_independent_of_worker_count():
    spec = DeformationSpec("exponential", 1.3, 50.0)
    one = generate_walks(spec, CAUCHY, 9, 6, 99, threads=1)
    two = generate_walks(spec, CAUCHY, 9, 6, 99, threads=2)
    assert np.array_equal(one.increments, two.increments)
    assert one.acceptance_rate == two.acceptance_rate


@given(st.integers(0, 2**64 - 1), st.integers(0, 10_000))
def test_single_walk_regenerable(seed, m):
    spec = DeformationSpec(MS, 1.0, 100.0)
    want, _ = sample_truncated(spec, CAUCHY, walk_rng(seed, m), 4)
    again, _ = sample_truncated(spec, CAUCHY, walk_rng(seed, m), 4)
    assert np.array_equal(want, again)


def test_ensemble_structure_and_symmetry():
    spec = DeformationSpec(MS, 1.0, 100.0)
    ens = generate_walks(spec, CAUCHY, 20_000, 50, 21)
    assert np.array_equal(ens.at(0), np.zeros(ens.M))
    assert np.allclose(np.diff(ens.values, axis=1, prepend=0.0), ens.increments)
    xN = ens.at(50)
    assert abs(xN.mean()) < 3 * xN.std() / math.sqrt(ens.M)
    with pytest.raises(IndexError):
        ens.at(51)


def test_variance_grows_linearly_with_kappa2():
    spec = DeformationSpec(MS, 1.0, 100.0)
    ens = generate_walks(spec, CAUCHY, 20_000, 50, 22)
    n = np.arange(1, 51)
    kappa2 = cumulants(spec, CAUCHY, 2).kappa_j(2)

    def slope(vals):
        return np.polyfit(n, vals.var(axis=0), 1)[0]

    rng = np.random.default_rng(23)
    boot = [slope(ens.values[rng.integers(0, ens.M, ens.M)]) for _ in range(200)]
    assert abs(slope(ens.values) - kappa2) < 3 * np.std(boot, ddof=1)


def test_increment_stationarity():
    ens = generate_walks(DeformationSpec("exponential", 1.2, 100.0), CAUCHY, 2000, 40, 24)
    first, second = ens.increments[:, :20].ravel(), ens.increments[:, 20:].ravel()
    assert stats.mannwhitneyu(first, second).pvalue > 0.01


def test_binary_round_trip(tmp_path):
    spec = DeformationSpec("tabulated", 1.0, 30.0, [(-2.0, 0.0), (0.0, 1.0), (1.5, 0.0)])
    ens = generate_walks(spec, StableParams(1.3, 0.5), 5, 7, 2**63 + 5)
    path = tmp_path / "e.bin"
    ens.to_binary(path, "ab" * 32, "0.1.0")
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack_from("<QQQ", raw, 8) == (5, 7, 2**63 + 5)
    assert raw[32:64] == bytes.fromhex("ab" * 32) and raw[64:80].rstrip(b"\0") == b"0.1.0"
    back = WalkEnsemble.from_binary(path)
    assert np.array_equal(back.values, ens.values)
    assert back.spec == spec and back.stable == ens.stable and back.seed == ens.seed
    assert back.acceptance_rate == ens.acceptance_rate
    assert len(raw) == 80 + 8 + 6 * 8 + 8 + 6 * 8 + 5 * 7 * 8


def test_binary_rejects_foreign_file(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"NOTAWALK" + bytes(100))
    with pytest.raises(ValueError):
        WalkEnsemble.from_binary(tmp_path / "x.bin")


def test_csv_export(tmp_path):
    ens = generate_walks(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 2, 3, 1)
    ens.to_csv(tmp_path / "e.csv", ("config_hash: abc",))
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[:2] == ["# config_hash: abc", "walk,n,X"]
    assert len(lines) == 2 + 2 * 4
    assert float(lines[-1].split(",")[2]) == ens.values[1, 2]


def test_memory_budget():
    with pytest.raises(MemoryError):
        generate_walks(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 10**6, 10**4, 0, memory_budget=2**30)
    with pytest.raises(ValueError):
        generate_walks(DeformationSpec(MS, 1.0, 100.0), CAUCHY, 0, 5, 0)
