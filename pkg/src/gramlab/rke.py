"""Fitting a positive-semidefinite kernel to noisy, incomplete dissimilarity
data, embedding new objects into it, and tuning the regularization weight by
pair holdout.

Input d values are SQUARED dissimilarities throughout: the fitted quantity for
a pair (i, j) is K_ii + K_jj - 2 K_ij.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator

from .exceptions import (
    ConvergenceWarning,
    DisconnectedGraphWarning,
    InfeasibleEmbeddingError,
    UnderdeterminedEmbeddingWarning,
)
from .kernels import eigentruncate, pseudo_attributes, pseudo_inverse, _eigh_sorted
from .splitting import edge_distances, solve_distance_fit
from .validation import check_symmetric, symmetrize


def _is_connected(n, I, J):
    if n <= 1:
        return True
    adj = coo_matrix((np.ones(len(I)), (I, J)), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


@dataclass(frozen=True)
class RkeProblem:
    """Indexed squared-dissimilarity triples over n objects (i < j, d >= 0)."""

    n: int
    I: np.ndarray
    J: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        if len(self.I) != len(self.J) or len(self.I) != len(self.d):
            raise ValueError("index and value arrays must have equal length")
        if len(self.d) == 0:
            raise ValueError("at least one dissimilarity pair required")
        if np.any(self.I < 0) or np.any(self.J >= self.n):
            raise ValueError(f"pair indices out of range [0, {self.n})")
        if np.any(self.I >= self.J):
            raise ValueError("pairs must have i < j")
        if np.any(self.d < 0):
            raise ValueError("dissimilarities must be nonnegative")
        keys = self.I.astype(np.int64) * self.n + self.J
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate pairs in dissimilarity data")
        if not _is_connected(self.n, self.I, self.J):
            warnings.warn(
                "pair graph is disconnected; geometry is unanchored per component",
                DisconnectedGraphWarning,
            )

    @classmethod
    def from_triples(cls, triples, n=None):
        """Build from an iterable of (i, j, d); i/j in either order."""
        triples = list(triples)
        if not triples:
            raise ValueError("at least one dissimilarity pair required")
        I = np.array([min(int(t[0]), int(t[1])) for t in triples])
        J = np.array([max(int(t[0]), int(t[1])) for t in triples])
        d = np.array([float(t[2]) for t in triples])
        if np.any(I == J):
            raise ValueError("self-pairs (i == j) are not allowed")
        if n is None:
            n = int(J.max()) + 1
        return cls(n=n, I=I, J=J, d=d)

    @property
    def n_pairs(self):
        return len(self.d)


@dataclass(frozen=True)
class RkeSolution:
    kernel: np.ndarray
    mu: float
    objective: float
    residuals: np.ndarray
    I: np.ndarray
    J: np.ndarray
    d: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def fitted(self):
        return self.d - self.residuals


def fit_kernel(problem, mu, max_iter=5000, eps_rel=1e-6):
    """Approximate minimizer of  sum |d - dhat| + mu * trace(K)  over the PSD cone."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    out = solve_distance_fit(
        problem.n, problem.I, problem.J, problem.d, mu,
        trace_sign=1.0, max_iter=max_iter, eps_rel=eps_rel,
    )
    K = out["kernel"]
    if not out["converged"]:
        warnings.warn(
            f"kernel fit stopped after {out['iterations']} iterations at primal residual "
            f"{out['primal_residual']:.2e}",
            ConvergenceWarning,
        )
    fitted = edge_distances(K, problem.I, problem.J)
    residuals = problem.d - fitted
    objective = float(np.sum(np.abs(residuals)) + mu * np.trace(K))
    diag = {k: v for k, v in out.items() if k != "kernel"}
    return RkeSolution(
        kernel=K, mu=mu, objective=objective, residuals=residuals,
        I=problem.I, J=problem.J, d=problem.d, diagnostics=diag,
    )


@dataclass(frozen=True)
class NewbieEmbedding:
    """Kernel column ``col`` and self-value for one new object; feasible when
    self_value - col' K^+ col >= 0 and col lies in range(K)."""

    col: np.ndarray
    self_value: float
    slack: float
    loss: float
    diagnostics: dict = field(default_factory=dict)


def _project_quadratic_epigraph(w_eig, Q_eig, s_hat, g_hat):
    """Project (s, g) onto {s'Ks <= g} for K with eigenpairs (w_eig, Q_eig)."""
    st = Q_eig.T @ s_hat
    val = float(np.sum(w_eig * st * st))
    if val <= g_hat:
        return s_hat, g_hat

    def phi(lam):
        scaled = st / (1.0 + lam * w_eig)
        return float(np.sum(w_eig * scaled * scaled)) - g_hat - lam / 2.0

    hi = 1.0
    while phi(hi) > 0.0 and hi < 1e18:
        hi *= 4.0
    if phi(hi) > 0.0:
        lam = hi
    else:
        lam = brentq(phi, 0.0, hi, xtol=1e-15, rtol=1e-14)
    s = Q_eig @ (st / (1.0 + lam * w_eig))
    return s, g_hat + lam / 2.0


def newbie_embed(K, d_new, max_iter=20000, eps_rel=1e-10):
    """Embed one new object from squared dissimilarities to a subset of the
    training objects: minimize  sum_i |d_i - (c + K_ii - 2 b_i)|  over
    b = K a (so b stays in range(K)) subject to the Schur feasibility
    c >= a'Ka, via the same splitting scheme as the kernel fit."""
    K = check_symmetric(K, tol=1e-10, name="kernel")
    n = K.shape[0]
    d_new = list(d_new)
    if not d_new:
        raise ValueError("at least one dissimilarity to a training object is required")
    S = np.array([int(i) for i, _ in d_new])
    dvals = np.array([float(v) for _, v in d_new])
    if np.any(dvals < 0):
        raise ValueError("dissimilarities must be nonnegative")
    if np.any(S < 0) or np.any(S >= n) or len(np.unique(S)) != len(S):
        raise ValueError("constraint indices must be unique and in range")

    w_eig, Q_eig = _eigh_sorted(K)
    w_eig = np.maximum(w_eig, 0.0)
    rank = int(np.sum(w_eig > 1e-10 * max(w_eig[0], np.finfo(float).tiny)))
    if len(S) < rank + 1:
        warnings.warn(
            f"{len(S)} constraints for a rank-{rank} kernel: embedding is underdetermined",
            UnderdeterminedEmbeddingWarning,
        )

    kappa = np.diag(K)[S]
    t = dvals - kappa
    m = len(S)
    # residual r = d - dhat = t + 2(Ka)_S - c, so the x-side map is Ma + c*1 with M = -2 K_S
    M = -2.0 * K[S, :]
    ones = np.ones(m)
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = M.T @ M + np.eye(n)
    H[:n, n] = M.T @ ones
    H[n, :n] = ones @ M
    H[n, n] = m + 1.0
    H_chol = cho_factor(H)

    scale0 = max(1.0, float(np.max(np.abs(dvals))))
    med = float(np.median(np.abs(dvals)))
    rho = 1.0 / med if med > 0 else 1.0
    eps_abs = 1e-14 * scale0

    a = np.zeros(n)
    c = 0.0
    r = t.copy()
    s = np.zeros(n)
    g = 0.0
    u = np.zeros(m)
    p = np.zeros(n)
    q = 0.0

    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        w1 = t - r - u
        rhs = np.empty(n + 1)
        rhs[:n] = M.T @ w1 + (s - p)
        rhs[n] = (g - q) + ones @ w1
        sol = cho_solve(H_chol, rhs)
        a, c = sol[:n], float(sol[n])

        Ma = M @ a + c * ones
        r_old = r
        resid = t - Ma - u
        r = np.sign(resid) * np.maximum(np.abs(resid) - 1.0 / rho, 0.0)
        s_old, g_old = s, g
        s, g = _project_quadratic_epigraph(w_eig, Q_eig, a + p, c + q)

        u = u + Ma + r - t
        p = p + a - s
        q = q + c - g

        rp = np.sqrt(np.sum((Ma + r - t) ** 2) + np.sum((a - s) ** 2) + (c - g) ** 2)
        dvec_a = M.T @ (r - r_old) - (s - s_old)
        dvec_c = ones @ (r - r_old) - (g - g_old)
        rd = rho * np.sqrt(np.sum(dvec_a**2) + dvec_c**2)
        norm_x = np.sqrt(np.sum(Ma**2) + np.sum(a**2) + c**2)
        norm_z = np.sqrt(np.sum(r**2) + np.sum(s**2) + g**2)
        eps_pri = np.sqrt(m + n + 1) * eps_abs + eps_rel * max(norm_x, norm_z, np.linalg.norm(t))
        eps_dual = np.sqrt(n + 1) * eps_abs + eps_rel * rho * np.sqrt(
            np.sum((M.T @ u + p) ** 2) + (ones @ u + q) ** 2
        )
        if rp <= eps_pri and rd <= eps_dual:
            converged = True
            break
        if it % 10 == 0:
            if rp > 10.0 * rd and rho < 1e8:
                rho *= 2.0
                u /= 2.0
                p /= 2.0
                q /= 2.0
            elif rd > 10.0 * rp and rho > 1e-8:
                rho /= 2.0
                u *= 2.0
                p *= 2.0
                q *= 2.0

    col = K @ s
    self_value = float(g)
    Kdag = pseudo_inverse(K)
    slack = self_value - float(col @ (Kdag @ col))
    loss = float(np.sum(np.abs(dvals - (self_value + kappa - 2.0 * col[S]))))
    if not converged:
        warnings.warn(f"newbie embedding stopped after {it} iterations", ConvergenceWarning)
    return NewbieEmbedding(
        col=col,
        self_value=self_value,
        slack=slack,
        loss=loss,
        diagnostics={"iterations": it, "converged": bool(converged)},
    )


def extend_kernel(K, emb, slack_tol=1e-8):
    """Block-extend K with one new object's column and self-value; the Schur
    condition keeps the (n+1) x (n+1) result nonnegative definite."""
    K = check_symmetric(K, tol=1e-10, name="kernel")
    n = K.shape[0]
    if emb.col.shape != (n,):
        raise ValueError(f"embedding column must have length {n}")
    Kdag = pseudo_inverse(K)
    slack = emb.self_value - float(emb.col @ (Kdag @ emb.col))
    if slack < -slack_tol:
        raise InfeasibleEmbeddingError(f"embedding infeasible: slack {slack:.3e} < -{slack_tol:.0e}")
    bn = np.linalg.norm(emb.col)
    if bn > 0:
        off_range = np.linalg.norm(emb.col - K @ (Kdag @ emb.col))
        if off_range > 1e-8 * bn:
            raise InfeasibleEmbeddingError(
                f"embedding column leaves range(K) by {off_range:.3e} (relative {off_range / bn:.3e})"
            )
    ext = np.zeros((n + 1, n + 1))
    ext[:n, :n] = K
    ext[:n, n] = emb.col
    ext[n, :n] = emb.col
    ext[n, n] = emb.self_value
    return symmetrize(ext)


def newbie_predict(model, K_ext):
    """Decision value of a fitted classifier at the newly embedded object."""
    K_ext = np.asarray(K_ext, dtype=float)
    n = model.n
    if K_ext.shape != (n + 1, n + 1):
        raise ValueError(f"extended kernel must be {(n + 1, n + 1)}, got {K_ext.shape}")
    return float(K_ext[n, :n] @ model.coefficients)


def _cv2_score(problem, keep, hold, mu, trace_fraction, max_iter, eps_rel):
    sub = RkeProblem(
        n=problem.n, I=problem.I[keep], J=problem.J[keep], d=problem.d[keep]
    )
    sol = fit_kernel(sub, mu, max_iter=max_iter, eps_rel=eps_rel)
    if np.trace(sol.kernel) <= 0.0:
        # kernel shrunk to zero (mu overwhelming): all fitted distances are 0
        dhat = np.zeros(len(hold))
    else:
        es = eigentruncate(sol.kernel, trace_fraction)
        X = pseudo_attributes(es)
        diffs = X[problem.I[hold]] - X[problem.J[hold]]
        dhat = np.sum(diffs * diffs, axis=1)
    return float(np.mean(np.abs(problem.d[hold] - dhat)))


def cv2_tune(problem, mu_grid, holdout_fraction=0.1, seed=0,
             trace_fraction=0.95, max_iter=5000, eps_rel=1e-6, jobs=1):
    """Pick mu by holding out pairs and scoring fitted pseudo-attribute
    distances against the held-out values (mean absolute error, squared scale).

    Deterministic given ``seed``; returns (best mu, (mu, error) curve).
    """
    mu_grid = list(mu_grid)
    if not mu_grid:
        raise ValueError("mu grid must be nonempty")
    if not 0.0 < holdout_fraction <= 0.5:
        raise ValueError(f"holdout fraction must be in (0, 0.5], got {holdout_fraction}")
    m = problem.n_pairs
    n_hold = max(1, int(round(holdout_fraction * m)))
    if n_hold >= m:
        raise ValueError("holdout would remove every pair")
    rng = np.random.default_rng(seed)

    def draw():
        hold = np.sort(rng.choice(m, size=n_hold, replace=False))
        keep = np.setdiff1d(np.arange(m), hold)
        deg = np.zeros(problem.n)
        np.add.at(deg, problem.I[keep], 1)
        np.add.at(deg, problem.J[keep], 1)
        had = np.zeros(problem.n)
        np.add.at(had, problem.I, 1)
        np.add.at(had, problem.J, 1)
        isolated = np.any((deg == 0) & (had > 0))
        return hold, keep, isolated

    hold, keep, isolated = draw()
    if isolated:
        hold, keep, isolated = draw()
        if isolated:
            warnings.warn(
                "holdout isolates at least one object; accepting the draw anyway",
                DisconnectedGraphWarning,
            )

    def score(mu):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DisconnectedGraphWarning)
            return _cv2_score(problem, keep, hold, mu, trace_fraction, max_iter, eps_rel)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            errors = list(pool.map(score, mu_grid))
    else:
        errors = [score(mu) for mu in mu_grid]
    curve = np.array(list(zip(mu_grid, errors)))
    best = int(np.argmin(errors))
    return mu_grid[best], curve


class KernelFromDissimilarities(BaseEstimator):
    """Estimator wrapper: fit a PSD kernel to (i, j, d) squared-dissimilarity
    triples and expose its truncated-spectrum embedding.

    Parameters
    ----------
    mu : float
        Trace-penalty weight.
    n_objects : int or None
        Number of objects; inferred from the largest index when None.
    trace_fraction : float
        Spectrum mass kept when extracting embedding coordinates.
    """

    def __init__(self, mu=0.01, n_objects=None, trace_fraction=0.95,
                 max_iter=5000, tol=1e-6):
        self.mu = mu
        self.n_objects = n_objects
        self.trace_fraction = trace_fraction
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 3:
            raise ValueError("X must be an (m, 3) array of (i, j, d) triples")
        problem = RkeProblem.from_triples(X, n=self.n_objects)
        self.solution_ = fit_kernel(problem, self.mu, max_iter=self.max_iter, eps_rel=self.tol)
        self.kernel_ = self.solution_.kernel
        es = eigentruncate(self.kernel_, self.trace_fraction)
        self.eigenvalues_ = es.values
        self.embedding_ = pseudo_attributes(es)
        self.residuals_ = self.solution_.residuals
        self.objective_ = self.solution_.objective
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def embed_new(self, d_pairs, **kwargs):
        """Newbie embedding of one object from (index, d) pairs; returns the
        embedding and the extended (n+1) x (n+1) kernel."""
        emb = newbie_embed(self.kernel_, d_pairs, **kwargs)
        return emb, extend_kernel(self.kernel_, emb)
