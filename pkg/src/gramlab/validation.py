"""Input validation helpers for matrices, labels and dissimilarity triples."""

import numpy as np


def as_matrix(M, name="matrix"):
    """Coerce to a float 2-D square array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def check_symmetric(M, tol=1e-12, name="matrix"):
    """Raise if ``M`` is not symmetric within an absolute entrywise tolerance."""
    M = as_matrix(M, name)
    dev = np.max(np.abs(M - M.T)) if M.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} is not symmetric: max |M - M.T| = {dev:.3e} > {tol:.1e}")
    return M


def symmetrize(M):
    """Exactly symmetric average (float addition is commutative, so (M+M.T)/2 is bitwise symmetric)."""
    M = np.asarray(M, dtype=float)
    return (M + M.T) / 2.0


def default_psd_tol(K):
    """Scale-invariant tolerance on the most negative admissible eigenvalue."""
    n = K.shape[0]
    return 1e-8 * max(np.trace(K) / n, np.finfo(float).tiny)


def validate_gram(K, psd_tol=None, sym_tol=1e-12, name="gram matrix"):
    """Check the Gram contract: square, symmetric within ``sym_tol``, smallest
    eigenvalue >= -psd_tol (default 1e-8 * trace/n)."""
    K = check_symmetric(K, tol=sym_tol, name=name)
    if psd_tol is None:
        psd_tol = default_psd_tol(K)
    lo = np.linalg.eigvalsh(symmetrize(K))[0] if K.size else 0.0
    if lo < -psd_tol:
        raise ValueError(
            f"{name} is not nonnegative definite: min eigenvalue {lo:.3e} < -{psd_tol:.3e}"
        )
    return K


def check_points(X, name="points"):
    """Coerce to a float (n, d) array with d >= 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D array of row vectors, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_labels(y, n=None, allow_unlabeled=True, name="labels"):
    """Validate labels in {-1, +1} (0 = unlabeled when allowed)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if n is not None and len(y) != n:
        raise ValueError(f"{name} has length {len(y)}, expected {n}")
    allowed = {-1.0, 1.0} | ({0.0} if allow_unlabeled else set())
    bad = set(np.unique(y)) - allowed
    if bad:
        raise ValueError(f"{name} must take values in {sorted(allowed)}, found {sorted(bad)}")
    return y


def check_index(i, n, name="index"):
    i = int(i)
    if not 0 <= i < n:
        raise IndexError(f"{name} {i} out of range [0, {n})")
    return i
