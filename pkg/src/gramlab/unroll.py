"""Manifold unrolling: the dissimilarity kernel fit restricted to k-nearest
neighbor pairs, with the trace penalty negated so distant objects spread apart.

Two stabilizers make the negated-trace problem well posed: the kernel is kept
doubly centered (distances pin it only up to translation otherwise), and its
trace is capped (the reward is unbounded once mu exceeds the edge Laplacian's
algebraic connectivity).  An active cap is surfaced as a warning, not an error.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from sklearn.base import BaseEstimator

from .exceptions import ConvergenceWarning, TraceCapWarning
from .kernels import pseudo_attributes, truncate_rank
from .rke import RkeSolution
from .splitting import edge_distances, solve_distance_fit
from .validation import check_points, check_symmetric


@dataclass(frozen=True)
class KnnGraph:
    """Symmetrized union of each vertex's k nearest neighbors, with the input
    squared dissimilarities on the edges."""

    k: int
    n: int
    I: np.ndarray
    J: np.ndarray
    d: np.ndarray

    @property
    def n_edges(self):
        return len(self.d)

    def degrees(self):
        deg = np.zeros(self.n, dtype=int)
        np.add.at(deg, self.I, 1)
        np.add.at(deg, self.J, 1)
        return deg


def _full_squared_distances(X):
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def knn_graph(X, k, metric="euclidean"):
    """Build the k-nearest-neighbor edge set from points (squared Euclidean
    distances) or from a precomputed complete dissimilarity matrix.

    Ties break toward the smaller index; a disconnected result is rejected
    with the advice to raise k.
    """
    if metric == "euclidean":
        D = _full_squared_distances(check_points(X))
    elif metric == "precomputed":
        D = check_symmetric(X, tol=1e-10, name="dissimilarity matrix")
        if np.any(D < 0):
            raise ValueError("dissimilarities must be nonnegative")
    else:
        raise ValueError(f"unknown metric {metric!r}")
    n = D.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    edges = set()
    idx = np.arange(n)
    for i in range(n):
        others = idx[idx != i]
        order = np.lexsort((others, D[i, others]))
        for j in others[order[:k]]:
            edges.add((min(i, int(j)), max(i, int(j))))
    edges = sorted(edges)
    I = np.array([e[0] for e in edges])
    J = np.array([e[1] for e in edges])
    adj = coo_matrix((np.ones(len(I)), (I, J)), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise ValueError(
            f"k={k} nearest-neighbor graph has {ncomp} components; raise k to connect it"
        )
    return KnnGraph(k=k, n=n, I=I, J=J, d=D[I, J].copy())


def default_trace_cap(graph):
    """Boundedness guard: mean edge dissimilarity times object count, scaled by
    the hop diameter (a flat layout's spread grows with the diameter, so a
    diameter-free cap would clip legitimate unrollings)."""
    adj = coo_matrix(
        (np.ones(graph.n_edges), (graph.I, graph.J)), shape=(graph.n, graph.n)
    ).tocsr()
    hops = shortest_path(adj, directed=False, unweighted=True)
    diam = int(np.max(hops[np.isfinite(hops)]))
    return 10.0 * float(np.mean(graph.d)) * graph.n * max(1, diam)


def _connectivity_scale(graph):
    """Second-smallest eigenvalue of the edge Laplacian: the trace reward is
    unbounded (before capping) once mu exceeds it."""
    n = graph.n
    L = np.zeros((n, n))
    L[graph.I, graph.J] = -1.0
    L[graph.J, graph.I] = -1.0
    L[np.arange(n), np.arange(n)] = graph.degrees()
    return float(np.linalg.eigvalsh(L)[1])


def _warm_start(graph, mu, trace_cap, seed=0, n_dims=6, stage_iters=1200, lr=0.5):
    """Annealed coordinate-space descent used to seed the convex solver.

    Minimizes the unrolling objective over explicit coordinates with the
    trace-reward weight walked down from above the connectivity scale to its
    target value: the strong early reward pulls the configuration flat, which
    vanilla splitting only reaches after very many iterations (the set of
    near-isometric configurations is a long curved valley).  The result is
    only a starting point; the splitting solve that follows owns the answer.
    """
    n = graph.n
    I, J, d = graph.I, graph.J, graph.d
    lam2 = _connectivity_scale(graph)
    hi = max(4.0 * lam2, 2.0 * mu)
    stages = []
    level = hi
    while level > mu * 3.0 and len(stages) < 6:
        stages.append(level)
        level /= 3.0
    stages.append(mu)

    def ray_rescale(Xc):
        # exact minimization of  sum |d - beta*dhat| - mu*beta*trace  over beta >= 0:
        # piecewise linear, so scan breakpoints d_e/dhat_e in ascending order
        dh = np.sum((Xc[I] - Xc[J]) ** 2, axis=1)
        T = float(np.sum(Xc * Xc))
        pos = dh > 1e-300
        if not np.any(pos) or T <= 0:
            return Xc
        beta_pts = d[pos] / dh[pos]
        order = np.argsort(beta_pts)
        beta_pts = beta_pts[order]
        wts = dh[pos][order]
        slope = -np.sum(wts) - mu * T + 2.0 * np.cumsum(wts)
        k = np.searchsorted(slope, 0.0)
        beta = beta_pts[min(k, len(beta_pts) - 1)] if k < len(beta_pts) else beta_pts[-1]
        if slope[-1] < 0.0:
            beta = trace_cap / T
        beta = min(max(beta, 0.0), trace_cap / T)
        return np.sqrt(beta) * Xc

    rng = np.random.default_rng(seed)
    p = min(n_dims, n - 1)
    X = 0.01 * rng.standard_normal((n, p))
    base_step = lr * np.sqrt(max(np.median(d), np.finfo(float).tiny))
    b1, b2, eps = 0.9, 0.999, 1e-8
    for stage, level in enumerate(stages):
        last = stage == len(stages) - 1
        iters = 4 * stage_iters if last else stage_iters
        step = base_step * (0.25 if last else 1.0)
        mom = np.zeros_like(X)
        vel = np.zeros_like(X)
        for it in range(1, iters + 1):
            Xc = X - X.mean(axis=0)
            tr = float(np.sum(Xc * Xc))
            if tr > trace_cap:
                Xc *= np.sqrt(trace_cap / tr)
            diff = Xc[I] - Xc[J]
            dh = np.sum(diff * diff, axis=1)
            grad = np.zeros_like(X)
            gcoef = (2.0 * np.sign(dh - d))[:, None] * diff
            np.add.at(grad, I, gcoef)
            np.add.at(grad, J, -gcoef)
            grad -= 2.0 * level * Xc
            mom = b1 * mom + (1.0 - b1) * grad
            vel = b2 * vel + (1.0 - b2) * grad * grad
            X = Xc - step * (mom / (1.0 - b1**it)) / (np.sqrt(vel / (1.0 - b2**it)) + eps)
        X = ray_rescale(X - X.mean(axis=0))
    Xc = X - X.mean(axis=0)
    tr = float(np.sum(Xc * Xc))
    if tr > trace_cap:
        Xc *= np.sqrt(trace_cap / tr)
    return Xc @ Xc.T


def unroll(graph, mu, max_iter=5000, eps_rel=1e-6, trace_cap=None,
           warm_start=True, seed=0):
    """Approximate minimizer of  sum_edges |d - dhat| - mu * trace(K)  over
    centered PSD kernels with trace at most the cap.

    ``warm_start`` seeds the splitting solver with an annealed coordinate
    descent (much faster flattening on curled inputs); disable it to run the
    splitting iteration cold.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if trace_cap is None:
        trace_cap = default_trace_cap(graph)
    K_init = _warm_start(graph, mu, trace_cap, seed=seed) if warm_start else None
    out = solve_distance_fit(
        graph.n, graph.I, graph.J, graph.d, mu,
        trace_sign=-1.0, center=True, trace_cap=trace_cap,
        max_iter=max_iter, eps_rel=eps_rel, K_init=K_init,
    )
    K = out["kernel"]
    if out["cap_active"]:
        warnings.warn(
            f"trace cap {trace_cap:.4g} is active: mu={mu:g} is too large for this edge set",
            TraceCapWarning,
        )
    if not out["converged"]:
        warnings.warn(
            f"unrolling stopped after {out['iterations']} iterations at primal residual "
            f"{out['primal_residual']:.2e}",
            ConvergenceWarning,
        )
    fitted = edge_distances(K, graph.I, graph.J)
    residuals = graph.d - fitted
    objective = float(np.sum(np.abs(residuals)) - mu * np.trace(K))
    diag = {k: v for k, v in out.items() if k != "kernel"}
    diag["trace_cap"] = trace_cap
    return RkeSolution(
        kernel=K, mu=mu, objective=objective, residuals=residuals,
        I=graph.I, J=graph.J, d=graph.d, diagnostics=diag,
    )


def unrolled_embedding(sol, p):
    """Coordinates from the top-p spectral pairs of the unrolled kernel."""
    es = truncate_rank(sol.kernel, p)
    return pseudo_attributes(es)


class ManifoldUnroller(BaseEstimator):
    """Estimator wrapper: neighbor graph -> unrolled kernel -> flat coordinates.

    Parameters
    ----------
    n_neighbors : int
        Neighbors per vertex for the edge set.
    mu : float
        Trace-reward weight (keep it small; an active trace cap warns).
    n_components : int
        Embedding dimension.
    dissimilarity : "euclidean" | "precomputed"
        Interpret ``X`` as points or as a complete squared-dissimilarity matrix.
    """

    def __init__(self, n_neighbors=6, mu=1e-3, n_components=2,
                 dissimilarity="euclidean", max_iter=5000, tol=1e-6,
                 trace_cap=None, warm_start=True, seed=0):
        self.n_neighbors = n_neighbors
        self.mu = mu
        self.n_components = n_components
        self.dissimilarity = dissimilarity
        self.max_iter = max_iter
        self.tol = tol
        self.trace_cap = trace_cap
        self.warm_start = warm_start
        self.seed = seed

    def fit(self, X, y=None):
        self.graph_ = knn_graph(X, self.n_neighbors, metric=self.dissimilarity)
        self.solution_ = unroll(
            self.graph_, self.mu, max_iter=self.max_iter, eps_rel=self.tol,
            trace_cap=self.trace_cap, warm_start=self.warm_start, seed=self.seed,
        )
        self.kernel_ = self.solution_.kernel
        self.eigenvalues_ = np.maximum(np.linalg.eigvalsh(self.kernel_)[::-1], 0.0)
        self.embedding_ = unrolled_embedding(self.solution_, self.n_components)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
