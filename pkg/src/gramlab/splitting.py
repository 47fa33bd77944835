"""Operator-splitting solver for distance-fitting over the PSD cone.

Minimizes  sum_e |d_e - dhat_e(K)| + sign * mu * trace(K)  over nonnegative
definite K, where dhat_e(K) = K_ii + K_jj - 2 K_ij on a fixed edge set.  The
splitting keeps three copies: K (free symmetric, carries the linear coupling),
r (per-edge residuals, soft-thresholded), and Z (cone copy; the trace term,
optional double-centering and an optional trace cap all fold into its
projection, which is exact).  The K-update solves a normal system whose n x n
diagonal block depends only on the edge set, so it is factored once.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def edge_distances(K, I, J):
    """dhat_e = K_ii + K_jj - 2 K_ij for each edge."""
    diag = np.diag(K)
    return diag[I] + diag[J] - 2.0 * K[I, J]


def _adjoint(w, I, J, n):
    """A*(w): accumulate each edge's Laplacian block scaled by w_e."""
    M = np.zeros((n, n))
    np.add.at(M, (I, J), -w)
    np.add.at(M, (J, I), -w)
    acc = np.zeros(n)
    np.add.at(acc, I, w)
    np.add.at(acc, J, w)
    M[np.arange(n), np.arange(n)] = acc
    return M


def _double_center(M):
    rm = M.mean(axis=1, keepdims=True)
    cm = M.mean(axis=0, keepdims=True)
    return M - rm - cm + M.mean()

def _eig_project(w, cap):
    """Project eigenvalues onto {w >= 0} or, with a cap, {w >= 0, sum w <= cap}."""
    lam = np.maximum(w, 0.0)
    if cap is None or lam.sum() <= cap:
        return lam
    ws = np.sort(w)[::-1]
    css = np.cumsum(ws)
    theta = 0.0
    for k in range(1, len(ws) + 1):
        cand = (css[k - 1] - cap) / k
        below = ws[k] if k < len(ws) else -np.inf
        if ws[k - 1] - cand > 0.0 and below - cand <= 0.0:
            theta = cand
            break
    return np.maximum(w - theta, 0.0)


def solve_distance_fit(
    n,
    I,
    J,
    d,
    mu,
    trace_sign=1.0,
    center=False,
    trace_cap=None,
    max_iter=5000,
    eps_rel=1e-6,
    eps_abs=None,
    K_init=None,
):
    """Run the splitting iteration; returns the cone-feasible kernel and diagnostics.

    ``trace_sign=+1`` penalizes trace, ``-1`` rewards it (requires a cap to stay
    bounded in general).  ``center`` constrains row sums of the kernel to zero.
    ``K_init`` warm-starts the iteration (the problem is convex, so the limit
    does not depend on it, only the iteration count does).
    """
    I = np.asarray(I, dtype=int)
    J = np.asarray(J, dtype=int)
    d = np.asarray(d, dtype=float)
    m = len(d)
    if m == 0:
        raise ValueError("empty edge set")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")

    idx = np.arange(n)
    deg = np.zeros(n)
    np.add.at(deg, I, 1.0)
    np.add.at(deg, J, 1.0)
    T = np.zeros((n, n))
    T[I, J] = 1.0 / 3.0
    T[J, I] = 1.0 / 3.0
    T[idx, idx] = 1.0 + deg / 3.0
    T_chol = cho_factor(T)

    scale0 = max(1.0, float(np.max(np.abs(d))))
    if eps_abs is None:
        eps_abs = 1e-14 * scale0
    med = float(np.median(np.abs(d)))
    rho = 1.0 / med if med > 0 else 1.0

    if K_init is None:
        K = np.zeros((n, n))
        Z = np.zeros((n, n))
        r = d.copy()
    else:
        K = np.asarray(K_init, dtype=float).copy()
        Z = K.copy()
        r = d - edge_distances(K, I, J)
    u = np.zeros(m)
    U = np.zeros((n, n))

    rp = rd = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        # K-step: (I + A*A) K = A*(g) + B, eliminated to an n x n system on diag(K)
        g = d - r - u
        B = Z - U
        sum_B = np.zeros(n)
        np.add.at(sum_B, I, B[I, J])
        np.add.at(sum_B, J, B[I, J])
        sum_g = np.zeros(n)
        np.add.at(sum_g, I, g)
        np.add.at(sum_g, J, g)
        k = cho_solve(T_chol, np.diag(B) + (2.0 / 3.0) * sum_B + (1.0 / 3.0) * sum_g)
        K = B.copy()
        K[idx, idx] = k
        off = (B[I, J] - g + k[I] + k[J]) / 3.0
        K[I, J] = off
        K[J, I] = off

        Ak = k[I] + k[J] - 2.0 * off
        resid = d - Ak - u
        r_old = r
        r = np.sign(resid) * np.maximum(np.abs(resid) - 1.0 / rho, 0.0)

        Z_old = Z
        V = K + U - trace_sign * (mu / rho) * np.eye(n)
        if center:
            V = _double_center(V)
        w, Q = np.linalg.eigh((V + V.T) / 2.0)
        lam = _eig_project(w, trace_cap)
        Z = (Q * lam) @ Q.T
        Z = (Z + Z.T) / 2.0

        u = u + Ak + r - d
        U = U + K - Z

        pri_vec = Ak + r - d
        pri_mat = K - Z
        rp = np.sqrt(np.sum(pri_vec**2) + np.sum(pri_mat**2))
        dual_mat = rho * (_adjoint(r - r_old, I, J, n) - (Z - Z_old))
        rd = np.linalg.norm(dual_mat)

        norm_x = np.sqrt(np.sum(Ak**2) + np.sum(K**2))
        norm_z = np.sqrt(np.sum(r**2) + np.sum(Z**2))
        eps_pri = np.sqrt(m + n * n) * eps_abs + eps_rel * max(norm_x, norm_z, np.linalg.norm(d))
        eps_dual = n * eps_abs + eps_rel * rho * np.linalg.norm(_adjoint(u, I, J, n) + U)
        if rp <= eps_pri and rd <= eps_dual:
            break

        if it % 10 == 0:
            if rp > 10.0 * rd and rho < 1e8:
                rho *= 2.0
                u /= 2.0
                U /= 2.0
            elif rd > 10.0 * rp and rho > 1e-8:
                rho /= 2.0
                u *= 2.0
                U *= 2.0

    converged = rp <= eps_pri and rd <= eps_dual
    cap_active = trace_cap is not None and float(np.trace(Z)) >= (1.0 - 1e-6) * trace_cap
    return {
        "kernel": Z,
        "iterations": it,
        "converged": bool(converged),
        "primal_residual": float(rp),
        "dual_residual": float(rd),
        "cap_active": bool(cap_active),
    }
