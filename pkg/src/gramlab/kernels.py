"""Kernel evaluation, Gram assembly and positive-semidefinite matrix machinery.

A kernel here is a value oracle: the Gaussian bump ``exp(-||x-y||^2 / width)``
or the plain inner product.  Everything downstream (distances, projections,
pseudo-inverses, spectral truncation, coordinate extraction) operates on the
induced Gram matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_matrix, check_index, check_points, check_symmetric, symmetrize

KERNEL_KINDS = ("gaussian", "linear")


@dataclass(frozen=True)
class Kernel:
    """A positive definite kernel on vectors.

    kind : "gaussian" (``exp(-||x-y||^2 / width)``, width > 0) or "linear" (dot product).
    """

    kind: str
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError(f"gaussian kernel requires width > 0, got {self.width}")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
        if self.kind == "linear":
            return float(x @ y)
        diff = x - y
        return float(np.exp(-(diff @ diff) / self.width))

    def cross(self, X, Y):
        """Kernel values between two point sets, shape (len(X), len(Y))."""
        X = check_points(X)
        Y = check_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        if self.kind == "linear":
            return X @ Y.T
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Y * Y, axis=1)[None, :]
            - 2.0 * (X @ Y.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / self.width)

    def gram(self, X):
        """Gram matrix over one point set; exactly symmetric, unit diagonal for gaussian."""
        K = symmetrize(self.cross(X, X))
        if self.kind == "gaussian":
            np.fill_diagonal(K, 1.0)
        return K


def gram(kernel, points):
    """Assemble the Gram matrix of ``kernel`` over ``points`` (rows are vectors)."""
    return kernel.gram(points)


def squared_distance(K, i, j):
    """Kernel-induced squared distance K[i,i] + K[j,j] - 2 K[i,j].

    Negative values above -1e-10 are rounded to 0; anything more negative
    signals a non-PSD input and raises.
    """
    K = as_matrix(K, "gram matrix")
    n = K.shape[0]
    i = check_index(i, n, "i")
    j = check_index(j, n, "j")
    d = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if d < -1e-10:
        raise ValueError(f"squared distance {d:.3e} < -1e-10; input is not nonnegative definite")
    return max(d, 0.0)


def squared_distances(K):
    """All pairwise kernel-induced squared distances as an (n, n) matrix."""
    K = as_matrix(K, "gram matrix")
    diag = np.diag(K)
    D = diag[:, None] + diag[None, :] - 2.0 * K
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def _eigh_sorted(M):
    """Symmetric eigendecomposition, eigenvalues descending, deterministic
    eigenvector signs (first component of nonnegligible magnitude made positive)."""
    w, V = np.linalg.eigh(symmetrize(M))
    order = np.argsort(w, kind="stable")[::-1]
    w = w[order]
    V = V[:, order]
    if V.size:
        mags = np.abs(V)
        thresh = 1e-12 * np.maximum(mags.max(axis=0), np.finfo(float).tiny)
        first = (mags > thresh[None, :]).argmax(axis=0)
        signs = np.sign(V[first, np.arange(V.shape[1])])
        signs[signs == 0] = 1.0
        V = V * signs[None, :]
    return w, V


def project_psd(M, sym_tol=1e-10):
    """Frobenius-nearest nonnegative definite matrix: clip negative eigenvalues to 0."""
    M = check_symmetric(M, tol=sym_tol, name="matrix")
    w, V = _eigh_sorted(M)
    w = np.maximum(w, 0.0)
    return symmetrize((V * w) @ V.T)


def pseudo_inverse(K, rank_tol=None):
    """Moore-Penrose inverse of a symmetric nonnegative definite matrix.

    Eigenvalues at or below ``rank_tol`` (default 1e-10 times the largest)
    are treated as zero; the zero matrix maps to the zero matrix.
    """
    K = check_symmetric(K, tol=1e-10, name="gram matrix")
    w, V = _eigh_sorted(K)
    top = w[0] if w.size else 0.0
    if top <= 0.0:
        return np.zeros_like(K)
    if rank_tol is None:
        rank_tol = 1e-10 * top
    inv = np.where(w > rank_tol, 1.0 / np.where(w > rank_tol, w, 1.0), 0.0)
    return symmetrize((V * inv) @ V.T)


@dataclass(frozen=True)
class EigenSystem:
    """Top-``p`` spectral pairs of a Gram matrix, eigenvalues descending and clipped at 0."""

    values: np.ndarray
    vectors: np.ndarray  # (n, p), orthonormal columns
    p: int
    total_trace: float = field(default=0.0)

    @property
    def captured_trace(self):
        return float(np.sum(self.values))


def eigentruncate(K, trace_fraction):
    """Smallest spectral truncation whose eigenvalues sum to at least
    ``trace_fraction`` of the (clipped) trace."""
    K = check_symmetric(K, tol=1e-10, name="gram matrix")
    if not 0.0 < trace_fraction <= 1.0:
        raise ValueError(f"trace_fraction must be in (0, 1], got {trace_fraction}")
    w, V = _eigh_sorted(K)
    w = np.maximum(w, 0.0)
    total = float(np.sum(w))
    if total <= 0.0:
        raise ValueError("degenerate kernel: trace is not positive")
    csum = np.cumsum(w)
    p = int(np.searchsorted(csum, trace_fraction * total - 1e-12 * total) + 1)
    p = min(p, len(w))
    return EigenSystem(values=w[:p].copy(), vectors=V[:, :p].copy(), p=p, total_trace=total)


def truncate_rank(K, p):
    """Spectral truncation at a fixed number of components."""
    K = check_symmetric(K, tol=1e-10, name="gram matrix")
    n = K.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"number of components must be in [1, {n}], got {p}")
    w, V = _eigh_sorted(K)
    w = np.maximum(w, 0.0)
    return EigenSystem(values=w[:p].copy(), vectors=V[:, :p].copy(), p=p, total_trace=float(np.sum(w)))


def pseudo_attributes(es):
    """Coordinates whose inner products reproduce the truncated Gram matrix.

    Row i is ``(sqrt(l_1) v_1[i], ..., sqrt(l_p) v_p[i])``, so the full-rank
    version reconstructs the matrix exactly.
    """
    return es.vectors * np.sqrt(es.values)[None, :]


def write_matrix(path, M):
    """Matrix text format: whitespace-separated rows, one row per line, full precision."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        for row in M:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path):
    """Parse the matrix text format; reports the first offending line on error."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in stripped.split()]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not a numeric row: {exc}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no matrix rows found")
    return np.asarray(rows, dtype=float)
