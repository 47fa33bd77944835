"""Margin cost functions c(tau), their subgradients, and a brute-force
population-minimizer oracle for sign-consistency checks.

All four costs are convex in the margin tau = y * f(x).  The logistic cost is
base-2 here (so it passes through 1 at tau = 0, like the unit hinge); the
classifier training objective uses the natural-log version, which differs only
by a constant factor that the regularization weight absorbs.
"""

from dataclasses import dataclass

import numpy as np

LOG2 = np.log(2.0)

LOSS_KINDS = ("misclass_ramp", "hinge", "logistic", "squared")


@dataclass(frozen=True)
class MarginLoss:
    """A margin cost; ``theta`` is the hinge steepness (ignored otherwise)."""

    kind: str
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.kind == "hinge" and not self.theta > 0:
            raise ValueError(f"hinge requires theta > 0, got {self.theta}")

    def value(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "misclass_ramp":
            out = np.maximum(-tau, 0.0)
        elif self.kind == "hinge":
            out = np.maximum(1.0 - self.theta * tau, 0.0)
        elif self.kind == "logistic":
            # log2(1 + exp(-tau)); logaddexp keeps large negative tau overflow-safe
            out = np.logaddexp(0.0, -tau) / LOG2
        else:
            out = (1.0 - tau) ** 2
        return out if out.ndim else float(out)

    def subgradient(self, tau):
        """A valid subgradient; 0 at kinks (the minimal-norm element)."""
        tau = np.asarray(tau, dtype=float)
        if self.kind == "misclass_ramp":
            out = np.where(tau < 0.0, -1.0, 0.0)
        elif self.kind == "hinge":
            out = np.where(self.theta * tau < 1.0, -self.theta, 0.0)
            out = np.where(self.theta * tau == 1.0, 0.0, out)
        elif self.kind == "logistic":
            out = -_sigmoid(-tau).reshape(tau.shape) / LOG2
        else:
            out = -2.0 * (1.0 - tau)
        return out if out.ndim else float(out)

    def __call__(self, tau):
        return self.value(tau)


def _sigmoid(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def misclassification():
    return MarginLoss("misclass_ramp")


def hinge(theta=1.0):
    return MarginLoss("hinge", theta=theta)


def logistic():
    return MarginLoss("logistic")


def squared():
    return MarginLoss("squared")


def evaluate(loss, tau):
    return loss.value(tau)


def subgradient(loss, tau):
    return loss.subgradient(tau)


def _check_grid(grid):
    lo, hi, step = grid
    if step > 1e-2:
        raise ValueError(f"grid too coarse: step {step} > 1e-2")
    if lo > -10.0 or hi < 10.0:
        raise ValueError(f"grid [{lo}, {hi}] must cover at least [-10, 10]")
    return float(lo), float(hi), float(step)


def population_minimizer(loss, p, grid=(-10.0, 10.0, 1e-3)):
    """Brute-force argmin over a grid of p*c(f) + (1-p)*c(-f).

    The grid samples cell midpoints of [lo, hi], so 0 is never a candidate and
    the argmin's sign is well defined whenever p != 1/2.  Ties break toward
    the smallest |f|.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    lo, hi, step = _check_grid(grid)
    ncells = int(round((hi - lo) / step))
    f = lo + (np.arange(ncells) + 0.5) * step
    obj = p * loss.value(f) + (1.0 - p) * loss.value(-f)
    best = np.min(obj)
    candidates = np.flatnonzero(obj <= best + 0.0)
    return float(f[candidates[np.argmin(np.abs(f[candidates]))]])


def check_sign_consistency(loss, p, grid=(-10.0, 10.0, 1e-3)):
    """True iff the grid oracle's population minimizer has the sign of 2p - 1."""
    if p == 0.5:
        raise ValueError("p = 1/2 has no sign target (the minimizer is 0)")
    fbar = population_minimizer(loss, p, grid)
    return np.sign(fbar) == np.sign(2.0 * p - 1.0)
