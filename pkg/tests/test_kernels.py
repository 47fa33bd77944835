import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gramlab.kernels import (
    EigenSystem,
    Kernel,
    eigentruncate,
    gram,
    project_psd,
    pseudo_attributes,
    pseudo_inverse,
    read_matrix,
    squared_distance,
    squared_distances,
    truncate_rank,
    write_matrix,
)


def random_psd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    K = A @ A.T / n * scale
    return (K + K.T) / 2.0


points_strategy = arrays(
    np.float64, st.tuples(st.integers(2, 6), st.integers(1, 3)),
    elements=st.floats(-3.0, 3.0, allow_nan=False),
)


def test_gram_gaussian_identical_points():
    K = gram(Kernel("gaussian", 1.0), np.array([[0.0], [0.0]]))
    assert np.allclose(K, np.ones((2, 2)))


def test_gram_gaussian_unit_separation():
    K = gram(Kernel("gaussian", 1.0), np.array([[0.0], [1.0]]))
    assert K[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-12)
    assert K[0, 0] == 1.0 and K[1, 1] == 1.0


def test_gram_linear_orthogonal():
    K = gram(Kernel("linear"), np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.array_equal(K, np.eye(2))


def test_kernel_input_errors():
    with pytest.raises(ValueError):
        Kernel("gaussian", 0.0)
    with pytest.raises(ValueError):
        Kernel("gaussian", -1.0)
    with pytest.raises(ValueError):
        Kernel("gaussian", 1.0)(np.array([1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Kernel("cubic")


@settings(max_examples=200, deadline=None)
@given(points_strategy, st.floats(0.1, 5.0))
def test_gram_symmetry_and_unit_diagonal(X, width):
    K = Kernel("gaussian", width).gram(X)
    assert np.max(np.abs(K - K.T)) <= 1e-12
    assert np.allclose(np.diag(K), 1.0)


def test_squared_distance_examples():
    assert squared_distance(np.eye(2), 0, 1) == pytest.approx(2.0)
    assert squared_distance(np.ones((2, 2)), 0, 1) == pytest.approx(0.0)
    K = gram(Kernel("gaussian", 1.0), np.array([[0.0], [1.0]]))
    assert squared_distance(K, 0, 1) == pytest.approx(2.0 - 2.0 * np.exp(-1.0), abs=1e-12)


def test_squared_distance_index_errors():
    with pytest.raises(IndexError):
        squared_distance(np.eye(2), 0, 2)
    with pytest.raises(IndexError):
        squared_distance(np.eye(2), -1, 0)


def test_squared_distance_rejects_strongly_negative():
    K = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        squared_distance(K, 0, 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7))
def test_squared_distance_properties_on_psd(seed, n):
    K = random_psd(np.random.default_rng(seed), n)
    D = squared_distances(K)
    assert np.all(np.diag(D) == 0.0)
    assert np.max(np.abs(D - D.T)) <= 1e-12
    assert np.all(D >= 0.0)
    for i in range(n):
        for j in range(n):
            assert squared_distance(K, i, j) == pytest.approx(D[i, j], abs=1e-10)


def test_project_psd_clips_negative_eigenvalue():
    assert np.allclose(project_psd(np.diag([2.0, -1.0])), np.diag([2.0, 0.0]))


def test_project_psd_fixed_point_on_cone():
    rng = np.random.default_rng(0)
    for _ in range(20):
        K = random_psd(rng, 5)
        assert np.max(np.abs(project_psd(K) - K)) <= 1e-10


def test_project_psd_hand_oracle():
    out = project_psd(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(out, np.full((2, 2), 0.5), atol=1e-12)


def test_project_psd_rejects_asymmetric():
    with pytest.raises(ValueError):
        project_psd(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_project_psd_idempotent_and_contraction(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    M = (M + M.T) / 2.0
    P = project_psd(M)
    assert np.linalg.eigvalsh(P)[0] >= -1e-10
    assert np.max(np.abs(project_psd(P) - P)) <= 1e-8
    # nearest-point property: no sampled PSD matrix is closer to M
    for _ in range(3):
        Q = random_psd(rng, n)
        assert np.linalg.norm(P - M) <= np.linalg.norm(Q - M) + 1e-9


def test_pseudo_inverse_examples():
    assert np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    assert np.allclose(pseudo_inverse(np.eye(3)), np.eye(3))
    v = np.array([1.0, 2.0])
    K = np.outer(v, v)
    Kd = pseudo_inverse(K)
    assert np.allclose(Kd, K / 25.0, atol=1e-12)
    assert np.allclose(K @ Kd @ K, K, atol=1e-10)


def test_pseudo_inverse_zero_matrix():
    assert np.array_equal(pseudo_inverse(np.zeros((3, 3))), np.zeros((3, 3)))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 7), st.integers(0, 3))
def test_moore_penrose_identities(seed, rank, null_dim):
    rng = np.random.default_rng(seed)
    n = rank + null_dim
    A = rng.standard_normal((n, rank))
    K = A @ A.T
    K = (K + K.T) / 2.0
    Kd = pseudo_inverse(K)
    scale = max(np.linalg.norm(K), 1e-30)
    dscale = max(np.linalg.norm(Kd), 1e-30)
    assert np.linalg.norm(K @ Kd @ K - K) <= 1e-8 * scale
    assert np.linalg.norm(Kd @ K @ Kd - Kd) <= 1e-8 * dscale
    assert np.linalg.norm((K @ Kd).T - K @ Kd) <= 1e-8
    assert np.linalg.norm((Kd @ K).T - Kd @ K) <= 1e-8


def test_eigentruncate_examples():
    assert eigentruncate(np.diag([3.0, 1.0]), 0.75).p == 1
    assert eigentruncate(np.eye(2), 1.0).p == 2


def test_eigentruncate_validation():
    with pytest.raises(ValueError):
        eigentruncate(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        eigentruncate(np.eye(2), 1.5)
    with pytest.raises(ValueError):
        eigentruncate(np.zeros((2, 2)), 0.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_eigentruncate_matches_prefix_sum_oracle(seed, fraction):
    K = random_psd(np.random.default_rng(seed), 4)
    es = eigentruncate(K, fraction)
    # independent oracle: sorted eigenvalues, smallest prefix reaching the mass
    w = np.sort(np.maximum(np.linalg.eigvalsh(K), 0.0))[::-1]
    total = w.sum()
    p = 1
    while w[:p].sum() < fraction * total - 1e-12 * total:
        p += 1
    assert es.p == p
    assert es.captured_trace >= fraction * es.total_trace - 1e-9 * es.total_trace
    assert np.all(np.diff(es.values) <= 1e-12)


def test_pseudo_attributes_single_object():
    es = EigenSystem(values=np.array([4.0]), vectors=np.array([[1.0]]), p=1, total_trace=4.0)
    assert np.allclose(pseudo_attributes(es), [[2.0]])


def test_pseudo_attributes_rank_one():
    v = np.array([1.0, 2.0])
    es = eigentruncate(np.outer(v, v), 1.0)
    X = pseudo_attributes(es)
    assert np.allclose(np.abs(X[:, 0]), [1.0, 2.0], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_pseudo_attributes_reconstruct_gram(seed):
    K = random_psd(np.random.default_rng(seed), 5)
    es = eigentruncate(K, 1.0)
    X = pseudo_attributes(es)
    assert np.max(np.abs(X @ X.T - K)) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_pseudo_attributes_sign_flip_invariance(seed, col):
    K = random_psd(np.random.default_rng(seed), 5)
    es = eigentruncate(K, 1.0)
    flipped = es.vectors.copy()
    flipped[:, col % es.p] *= -1.0
    es2 = EigenSystem(values=es.values, vectors=flipped, p=es.p, total_trace=es.total_trace)
    G1 = pseudo_attributes(es) @ pseudo_attributes(es).T
    G2 = pseudo_attributes(es2) @ pseudo_attributes(es2).T
    assert np.max(np.abs(G1 - G2)) <= 1e-10


def test_truncate_rank_bounds():
    with pytest.raises(ValueError):
        truncate_rank(np.eye(3), 0)
    with pytest.raises(ValueError):
        truncate_rank(np.eye(3), 4)


def test_matrix_text_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    M = rng.standard_normal((4, 3)) * np.pi
    path = tmp_path / "m.txt"
    write_matrix(path, M)
    assert np.array_equal(read_matrix(path), M)


def test_matrix_text_reports_bad_line(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("1 2\n3 oops\n")
    with pytest.raises(ValueError, match=":2"):
        read_matrix(path)


def test_matrix_text_ragged_rows(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("1 2\n3\n")
    with pytest.raises(ValueError, match="columns"):
        read_matrix(path)
