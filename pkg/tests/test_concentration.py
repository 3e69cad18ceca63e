import math

import numpy as np
import pytest

from freeness_lab.concentration import (
    LipschitzStatistic,
    binomial_ci_radius,
    empirical_tail,
    get_statistic,
    herbst_bound,
    lipschitz_ratio,
    statistic_registry,
)
from freeness_lab.haar import RngStream, sample_ginibre, sample_haar_unitary


def test_herbst_values():
    assert herbst_bound(200, 0.05, 1) == pytest.approx(4 * math.exp(-200**2 * 0.0025 / 12), rel=1e-14)
    assert herbst_bound(200, 0.05, 1) == pytest.approx(9.615e-4, rel=1e-3)
    assert herbst_bound(16, 0.02, 1) == pytest.approx(3.966, abs=1e-3)


def test_herbst_lipschitz_scaling():
    # doubling L needs double delta for the same bound
    for n, d, L in [(50, 0.1, 1), (128, 0.03, 3)]:
        assert herbst_bound(n, 2 * d, 2 * L) == pytest.approx(herbst_bound(n, d, L), rel=1e-14)


@pytest.mark.parametrize("bad", [(0, 0.1, 1), (4, 0, 1), (4, 0.1, 0), (4, -1, 1)])
def test_herbst_rejects(bad):
    with pytest.raises(ValueError):
        herbst_bound(*bad)


def test_registry_constants():
    reg = {s.name: s for s in statistic_registry(4)}
    assert reg["tr1"].lip == 1 and reg["tr12"].lip == 2 and reg["word"].lip == 8
    assert get_statistic("word", k=1).lip == 2
    with pytest.raises(KeyError):
        get_statistic("nope")


def perturbed(us, gen, scale):
    out = []
    for u in us:
        H = sample_ginibre(u.shape[0], gen)
        H = (H + H.conj().T) / 2
        w, Q = np.linalg.eigh(H)
        out.append(u @ (Q * np.exp(1j * scale * w)) @ Q.conj().T)
    return out


@pytest.mark.parametrize("name, k", [("tr1", 4), ("tr12", 4), ("word", 1), ("word", 2), ("word", 4)])
@pytest.mark.parametrize("scale", [1e-3, 0.1, 2.0])
def test_lipschitz_spot_check(name, k, scale):
    stat = get_statistic(name, k)
    gen = RngStream(31, k).generator()
    for _ in range(20):
        us = [sample_haar_unitary(12, gen) for _ in range(stat.arity)]
        vs = perturbed(us, gen, scale)
        assert lipschitz_ratio(stat, us, vs) <= stat.lip * (1 + 1e-9)


def test_lipschitz_ratio_same_point():
    stat = get_statistic("tr1")
    u = [sample_haar_unitary(4, RngStream(0))]
    assert lipschitz_ratio(stat, u, u) == 0.0


def test_ci_radius():
    assert binomial_ci_radius(0, 10_000) > 0
    assert binomial_ci_radius(0, 10_000) < 1e-3
    assert binomial_ci_radius(5, 100) > binomial_ci_radius(50, 10_000)


def test_zero_statistic_never_exceeds():
    zero = LipschitzStatistic("zero", lambda us: 0.0, 1.0, 1)
    report = empirical_tail(zero, 8, 1000, [0.01, 0.5], seed=0)
    assert all(r["freq"] == 0 for r in report.rows)
    assert report.sound


def test_small_n_is_vacuous_but_recorded():
    report = empirical_tail(get_statistic("tr1"), 16, 1000, [0.02], seed=3)
    row = report.rows[0]
    assert row["vacuous"] and row["bound"] == 1.0
    assert row["raw_bound"] == pytest.approx(3.966, abs=1e-3)
    assert 0 < row["freq"] <= 1 and row["sound"]
    assert row["shifted_freq"] >= row["freq"]


def test_reps_minimum():
    with pytest.raises(ValueError):
        empirical_tail(get_statistic("tr1"), 8, 999, [0.1], seed=0)


def test_thread_independence():
    stat = get_statistic("tr12")
    a = empirical_tail(stat, 10, 1000, [0.05, 0.2], seed=4, threads=1)
    b = empirical_tail(stat, 10, 1000, [0.05, 0.2], seed=4, threads=3)
    assert a.rows == b.rows and a.mean == b.mean
