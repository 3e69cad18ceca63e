import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeness_lab.band import (
    BandPattern,
    band_entry_count,
    band_project,
    band_real_dimension,
    block_partition,
    circular_distance,
    circular_distance_matrix,
    commutant_bound,
    covering_log_bound,
    greedy_net,
    volumetric_log_bound,
)
from freeness_lab.coupling import reference_diagonal
from freeness_lab.haar import RngStream, sample_ginibre
from freeness_lab.linalg import commutator, operator_norm, two_norm


@pytest.mark.parametrize("i, j, n, d", [(3, 3, 5, 0), (1, 8, 8, 1), (2, 5, 6, 3), (1, 4, 7, 3)])
def test_circular_distance(i, j, n, d):
    assert circular_distance(i, j, n) == d
    assert circular_distance(j, i, n) == d


@pytest.mark.parametrize("i, j", [(0, 1), (1, 9)])
def test_circular_distance_range(i, j):
    with pytest.raises(ValueError):
        circular_distance(i, j, 8)


def test_distance_matrix_matches_scalar():
    n = 9
    D = circular_distance_matrix(n)
    for i, j in itertools.product(range(n), repeat=2):
        assert D[i, j] == circular_distance(i + 1, j + 1, n)


def brute_count(n, eps):
    return sum(circular_distance(i, j, n) <= eps * n for i in range(1, n + 1) for j in range(1, n + 1))


@pytest.mark.parametrize("n", [1, 2, 3, 8, 9, 16, 31])
@pytest.mark.parametrize("eps", [0.01, 0.05, 0.125, 0.2, 0.3, 0.49, 0.5, 0.75])
def test_entry_count_brute_force(n, eps):
    count = band_entry_count(n, eps)
    assert count == brute_count(n, eps)
    assert count == BandPattern(n, eps).mask().sum()
    if eps < 0.5 and math.floor(eps * n) < n / 2:
        assert count <= n * (2 * math.floor(eps * n) + 1)
    assert band_real_dimension(n, eps) == 2 * count


def test_entry_count_examples():
    assert band_entry_count(8, 1 / 8) == 24
    assert band_entry_count(10, 0.5) == 100
    assert band_entry_count(10, 0.05) == 10


def test_pattern_symmetric_and_diagonal():
    p = BandPattern(11, 0.2)
    for i, j in itertools.product(range(1, 12), repeat=2):
        assert p.allowed(i, j) == p.allowed(j, i)
    assert all(p.allowed(i, i) for i in range(1, 12))


@pytest.mark.parametrize("n, eps", [(64, 0.25), (10, 0.2), (100, 0.07), (37, 0.3)])
def test_block_partition_covers(n, eps):
    part = block_partition(n, eps)
    sizes = [s.stop - s.start for s in part.slices]
    assert sum(sizes) == n
    assert part.m == math.floor(n * eps / 2)
    assert all(s.stop == t.start for s, t in zip(part.slices, part.slices[1:]))
    assert part.m >= 1


def three_sum_projection(B, eps):
    """Sum of P_j B P_j + P_j B P_(j+1) + P_j B P_(j-1), written out directly."""
    part = block_partition(B.shape[0], eps)
    blocks = part.slices
    N = len(blocks)
    P = [np.zeros(B.shape) for _ in range(N)]
    for t, s in enumerate(blocks):
        P[t][s, s] = np.eye(s.stop - s.start)
    out = sum(P[j] @ B @ P[j] for j in range(N))
    if N > 1:
        out = out + sum(P[j] @ B @ P[(j + 1) % N] for j in range(N))
    if N > 2:
        out = out + sum(P[j] @ B @ P[(j - 1) % N] for j in range(N))
    return out


@pytest.mark.parametrize("n, eps", [(64, 0.25), (20, 0.1), (30, 0.2), (17, 0.5), (16, 0.6), (9, 0.25)])
def test_three_sum_identity(n, eps):
    B = sample_ginibre(n, RngStream(n))
    assert np.array_equal(band_project(B, eps), three_sum_projection(B, eps))


def test_diagonal_input_fixed():
    d = np.diag(np.arange(1, 9) * (1 + 1j))
    for eps in (0.01, 0.1, 0.3):
        assert np.array_equal(band_project(d, eps), d)
        assert two_norm(d - band_project(d, eps)) == 0


def test_small_epsilon_gives_diagonal():
    B = sample_ginibre(12, RngStream(0))
    assert np.array_equal(band_project(B, 0.1), np.diag(np.diag(B)))


def test_nonpositive_epsilon():
    with pytest.raises(ValueError):
        band_project(np.eye(3), 0)


def check_bounds(B, eps):
    n = B.shape[0]
    P = band_project(B, eps)
    A = reference_diagonal(n)
    assert BandPattern(n, eps).contains(P)
    assert operator_norm(P) <= 3 * operator_norm(B) * (1 + 1e-12)
    assert two_norm(B - P) <= commutant_bound(two_norm(commutator(A, B)), eps) * (1 + 1e-12) + 1e-15


def test_all_ones_small_instance():
    check_bounds(np.ones((8, 8), dtype=complex), 0.5)


@given(st.integers(0, 2**32), st.sampled_from([4, 8, 13, 32]), st.sampled_from([0.05, 0.1, 0.25, 0.5, 0.6]))
@settings(max_examples=60, deadline=None)
def test_projection_bounds_gaussian(seed, n, eps):
    check_bounds(sample_ginibre(n, RngStream(seed)), eps)


def worst_dropped(n, eps):
    """Ones exactly on the dropped entries at the smallest circular distance."""
    kept = band_project(np.ones((n, n)), eps) != 0
    d = circular_distance_matrix(n)
    if kept.all():
        return None
    return ((~kept) & (d == d[~kept].min())).astype(complex)


def dropped_certificate(n, eps):
    # lhs/rhs for the hardest single-distance instance; the bound holds iff <= 1
    B = worst_dropped(n, eps)
    if B is None:
        return 0.0
    lhs = two_norm(B - band_project(B, eps))
    return lhs / commutant_bound(two_norm(commutator(reference_diagonal(n), B)), eps)


@pytest.mark.parametrize("n", [8, 16, 64, 256])
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.25, 0.6])
def test_projection_bound_worst_dropped_entries(n, eps):
    assert dropped_certificate(n, eps) <= 1


def test_projection_bound_fails_far_outside_tested_range():
    # the kept block pairs may drop entries at circular distance r + 1 when the
    # remainder block is short, so at very large eps*n the constant 8 sqrt(pi)/eps
    # is not enough; documented limitation
    assert dropped_certificate(2 * 1000 + 1, 0.2) > 1


def test_covering_log_bound_values():
    assert covering_log_bound(0.1, 1) == pytest.approx(0.2 * math.log(30), rel=1e-14)
    assert covering_log_bound(0.1, 1) == pytest.approx(0.6802, abs=1e-4)
    assert covering_log_bound(1 - 1e-12, 1) == pytest.approx(2 * math.log(3), rel=1e-9)
    with pytest.raises(ValueError):
        covering_log_bound(1.0, 1.0)
    with pytest.raises(ValueError):
        covering_log_bound(0.0, 1.0)


def test_covering_log_bound_monotone():
    # d/de [2e log(3R/e)] = 2 log(3R/e) - 2 > 0 for e < 3R/e; increasing on (0, R)
    R = 1.0
    grid = np.linspace(1e-4, R - 1e-4, 500)
    values = np.array([covering_log_bound(e, R) for e in grid])
    assert np.all(np.diff(values) > 0)
    assert np.all(values > 0)


def test_greedy_net_trivial():
    p = np.eye(2, dtype=complex)
    assert len(greedy_net([p], 0.5)) == 1
    assert len(greedy_net([p, p + 0.01], 0.5)) == 1
    assert greedy_net([], 0.5) == []


def test_greedy_net_toy_duality():
    n, eps, R = 2, 0.5, 1.0
    gen = RngStream(17).generator()
    mask = BandPattern(n, 0.5).mask()
    pts = []
    while len(pts) < 10_000:
        M = np.where(mask, sample_ginibre(n, gen), 0)
        r = gen.uniform() ** (1 / (2 * mask.sum()))
        pts.append(M * (R * r / two_norm(M)))
    net = greedy_net(pts, eps)
    flat = np.stack([p.ravel() for p in net]) / np.sqrt(n)
    allp = np.stack([p.ravel() for p in pts]) / np.sqrt(n)
    # separation
    gaps = np.linalg.norm(flat[:, None, :] - flat[None, :, :], axis=2)
    assert np.all(gaps[~np.eye(len(net), dtype=bool)] >= eps)
    # covering
    cover = np.min(np.linalg.norm(allp[:, None, :] - flat[None, :, :], axis=2), axis=1)
    assert np.all(cover < eps)
    # packing bound with the true real dimension
    log_size = math.log(len(net)) / n**2
    assert log_size <= volumetric_log_bound(band_real_dimension(n, 0.5), n, eps, R)
