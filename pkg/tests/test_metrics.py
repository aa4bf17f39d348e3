import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from diffaug.metrics import (GaussianStats, build_manifold, fid, gaussian_stats, improved_f1,
                             improved_precision, improved_recall, matrix_sqrt_spd, quality_report)
from oracles import knn_radii_brute

PTS = np.array([[0.0], [1.0], [3.0]])


@pytest.mark.parametrize("k,expected", [(1, [1, 1, 2]), (2, [3, 2, 3])])
def test_hand_radii(k, expected):
    np.testing.assert_array_equal(build_manifold(PTS, k).radii, expected)


def test_too_few_points():
    with pytest.raises(ValueError):
        build_manifold(np.array([[0.0], [1.0]]), 2)


def test_radii_match_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(4, 201))
        d = int(rng.integers(1, 6))
        k = int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        if rng.random() < 0.3:
            X = np.round(X, 1)  # force exact ties
        assert build_manifold(X, k).radii.tolist() == knn_radii_brute(X.tolist(), k)


def test_precision_hand_example():
    assert improved_precision(build_manifold(PTS, 1), np.array([[2.0], [6.0]])) == 0.5


def test_recall_hand_example():
    assert improved_recall(build_manifold(PTS, 1), np.array([[2.0], [6.0]])) == 0.5


def test_identical_sets_and_far_sets():
    X = np.random.default_rng(1).normal(size=(30, 3))
    m = build_manifold(X, 3)
    assert improved_precision(m, X) == 1.0
    assert improved_recall(m, X) == 1.0
    assert improved_precision(m, X + 1e6) == 0.0
    assert improved_recall(m, X + 1e6) == 0.0


def test_empty_generated_set():
    with pytest.raises(ValueError):
        improved_precision(build_manifold(PTS, 1), np.zeros((0, 1)))


def test_f1_table_value():
    assert improved_f1(0.4517, 0.1117) == pytest.approx(0.1791, abs=5e-4)


def test_f1_edge_cases():
    assert improved_f1(0.37, 0.37) == pytest.approx(0.37)
    assert improved_f1(0.0, 0.5) == 0.0
    assert improved_f1(0.0, 0.0) == 0.0


@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_f1_between_min_and_max(p, r):
    f = improved_f1(p, r)
    assert min(p, r) - 1e-15 <= f <= max(p, r) + 1e-15


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(4, 30), st.integers(1, 4)),
              elements=st.floats(-100, 100)), st.integers(1, 3))
def test_self_precision_is_one(X, k):
    assert improved_precision(build_manifold(X, k), X) == 1.0


def test_gaussian_stats_hand():
    s = gaussian_stats(np.array([[0.0, 0.0], [2.0, 2.0]]))
    np.testing.assert_array_equal(s.mu, [1, 1])
    np.testing.assert_array_equal(s.sigma, [[2, 2], [2, 2]])


def test_gaussian_stats_identical_points():
    s = gaussian_stats(np.ones((5, 3)))
    np.testing.assert_array_equal(s.sigma, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        gaussian_stats(np.ones((1, 3)))


def test_sqrt_simple_cases():
    np.testing.assert_allclose(matrix_sqrt_spd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(matrix_sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_sqrt_squares_back():
    rng = np.random.default_rng(2)
    for d in (1, 3, 10, 40):
        M = rng.normal(size=(d, d))
        A = M @ M.T
        B = matrix_sqrt_spd(A)
        np.testing.assert_array_equal(B, B.T)
        assert np.linalg.norm(B @ B - A) / np.linalg.norm(A) < 1e-8


def test_sqrt_rejects_bad_input():
    with pytest.raises(ValueError):
        matrix_sqrt_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        matrix_sqrt_spd(np.diag([1.0, -1.0]))


def test_sqrt_clamps_rounding_negatives():
    B = matrix_sqrt_spd(np.diag([1.0, -1e-13]))
    np.testing.assert_allclose(B, np.diag([1.0, 0.0]))


def test_fid_identical():
    s = gaussian_stats(np.random.default_rng(3).normal(size=(50, 4)))
    assert fid(s, s) == pytest.approx(0.0, abs=1e-8)


def test_fid_one_dimensional_closed_form():
    a = GaussianStats(np.array([0.0]), np.array([[1.0]]))
    b = GaussianStats(np.array([2.0]), np.array([[4.0]]))
    assert fid(a, b) == pytest.approx(5.0, abs=1e-8)


def test_fid_equal_covariance_is_mean_distance():
    m = np.array([1.0, -2.0, 0.5])
    a = GaussianStats(np.zeros(3), np.eye(3))
    b = GaussianStats(m, np.eye(3))
    assert fid(a, b) == pytest.approx(m @ m, rel=1e-12)


def test_fid_commuting_covariances_closed_form():
    # diagonal covariances: sum (sqrt(a) - sqrt(b))^2
    a, b = np.array([1.0, 4.0, 0.25]), np.array([9.0, 1.0, 0.25])
    expected = np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)
    got = fid(GaussianStats(np.zeros(3), np.diag(a)), GaussianStats(np.zeros(3), np.diag(b)))
    assert got == pytest.approx(expected, rel=1e-12)


def test_fid_dimension_mismatch():
    with pytest.raises(ValueError):
        fid(GaussianStats(np.zeros(2), np.eye(2)), GaussianStats(np.zeros(3), np.eye(3)))


@pytest.mark.parametrize("seed", range(5))
def test_fid_symmetric_and_rigid_invariant(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(200, 6)) @ rng.normal(size=(6, 6))
    B = rng.normal(size=(150, 6)) * 1.5 + 0.3
    sa, sb = gaussian_stats(A), gaussian_stats(B)
    base = fid(sa, sb)
    assert fid(sb, sa) == pytest.approx(base, rel=1e-6)
    Q = np.linalg.qr(rng.normal(size=(6, 6)))[0]
    shift = rng.normal(size=6) * 10
    moved = fid(gaussian_stats(A @ Q.T + shift), gaussian_stats(B @ Q.T + shift))
    assert moved == pytest.approx(base, rel=1e-6)


def test_quality_report_identical_sets():
    X = np.random.default_rng(6).normal(size=(40, 3))
    q = quality_report(X, X, 3)
    assert (q.improved_precision, q.improved_recall, q.improved_f1) == (1.0, 1.0, 1.0)
    assert q.fid == pytest.approx(0.0, abs=1e-8)
    assert q.improved_f1 == improved_f1(q.improved_precision, q.improved_recall)
