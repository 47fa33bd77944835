"""Representer-form margin classifiers f(.) = sum_l c_l K(., l).

Training minimizes  mean_labeled(cost(y_i f_i)) + mu * c'Kc  with no intercept.
Per-cost solvers: squared -> one linear solve (ridge on +-1 labels), logistic
-> damped Newton (natural-log likelihood; the base-2/natural-log factor is
absorbed by mu), hinge -> dual coordinate ascent over box constraints.
Unlabeled training objects keep their Gram geometry but contribute no loss
term; their coefficients come out zero (up to the range-space projection).
"""

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import ConvergenceWarning, SingularSystemError
from .kernels import Kernel, _eigh_sorted
from .losses import MarginLoss, _sigmoid
from .validation import check_labels, check_points, check_symmetric

MODEL_FORMAT = "gramlab-model/1"


@dataclass(frozen=True)
class TrainingSet:
    """Labeled objects given either as attribute vectors plus a kernel, or as
    a precomputed Gram matrix; label 0 marks an unlabeled object."""

    labels: np.ndarray
    gram: Optional[np.ndarray] = None
    kernel: Optional[Kernel] = None
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        labeled = self.labels != 0
        if np.sum(labeled) < 2:
            raise ValueError("need at least 2 labeled objects")
        present = set(np.unique(self.labels[labeled]))
        if present != {-1.0, 1.0}:
            raise ValueError("both classes must be present among labeled objects")

    @classmethod
    def from_gram(cls, K, y):
        K = check_symmetric(K, tol=1e-12, name="gram matrix")
        y = check_labels(y, n=K.shape[0])
        return cls(labels=y, gram=K)

    @classmethod
    def from_points(cls, X, y, kernel):
        X = check_points(X)
        y = check_labels(y, n=X.shape[0])
        return cls(labels=y, kernel=kernel, points=X, gram=kernel.gram(X))

    @property
    def n(self):
        return len(self.labels)

    @property
    def labeled_mask(self):
        return self.labels != 0


@dataclass(frozen=True)
class ClassifierModel:
    coefficients: np.ndarray
    mu: float
    loss: MarginLoss
    labeled_mask: np.ndarray
    gram: Optional[np.ndarray] = None
    kernel: Optional[Kernel] = None
    points: Optional[np.ndarray] = None
    objective: float = np.nan
    penalty: str = "rkhs"
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.coefficients)


def _data_cost(loss, tau):
    """Training-time cost; logistic uses the natural-log likelihood."""
    if loss.kind == "logistic":
        return np.logaddexp(0.0, -tau)
    return loss.value(tau)


def _primal_objective(K, y, mu, c, loss):
    """mean labeled cost + mu c'Kc, on the labeled block."""
    f = K @ c
    return float(np.mean(_data_cost(loss, y * f)) + mu * (c @ f))


def _project_range(K, c, rel_tol=1e-12):
    """Project coefficients onto the Gram column space (removes null-space junk)."""
    w, V = _eigh_sorted(K)
    top = w[0] if w.size else 0.0
    if top <= 0.0:
        return np.zeros_like(c)
    keep = w > rel_tol * top
    if np.all(keep):
        return c
    Vr = V[:, keep]
    return Vr @ (Vr.T @ c)


def _fit_squared(K, y, mu):
    n = len(y)
    scale = np.linalg.norm(K, np.inf) if K.size else 0.0
    if n * mu < 1e-14 * scale:
        floor = 1e-12 * scale / n
        raise SingularSystemError(
            f"ridge system too ill-conditioned at mu={mu:g}; use mu >= {floor:.3e}"
        )
    c = np.linalg.solve(K + n * mu * np.eye(n), y)
    obj = _primal_objective(K, y, mu, c, MarginLoss("squared"))
    return c, {"n_iter": 1, "converged": True, "objective_history": [obj]}


def logistic_objective_gradient(K, y, mu, c):
    """Natural-log penalized likelihood objective and its gradient in c."""
    n = len(y)
    f = K @ c
    tau = y * f
    obj = float(np.mean(np.logaddexp(0.0, -tau)) + mu * (c @ f))
    g = -y * _sigmoid(-tau) / n + 2.0 * mu * c
    return obj, K @ g

def _fit_logistic(K, y, mu, max_iter=200, tol=1e-8):
    # Newton on the root system  g(c) = -y*sigmoid(-tau)/n + 2 mu c = 0,
    # whose Jacobian  (1/n) W K + 2 mu I  stays nonsingular even for singular K;
    # step lengths backtrack on the primal objective.
    n = len(y)
    c = np.zeros(n)
    obj, grad = logistic_objective_gradient(K, y, mu, c)
    history = [obj]
    converged = False
    for _ in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            converged = True
            break
        tau = y * (K @ c)
        s = _sigmoid(-tau)
        g = -y * s / n + 2.0 * mu * c
        w = s * (1.0 - s)
        J = (w[:, None] * K) / n + 2.0 * mu * np.eye(n)
        step = np.linalg.solve(J, -g)
        slope = grad @ step
        if slope > 0:
            step = -grad
            slope = -(grad @ grad)
        t = 1.0
        accepted = False
        while t > 1e-12:
            cand = c + t * step
            obj_new, grad_new = logistic_objective_gradient(K, y, mu, cand)
            if obj_new <= obj + 1e-4 * t * slope:
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        c, obj, grad = cand, obj_new, grad_new
        history.append(obj)
    converged = converged or np.max(np.abs(grad)) <= tol
    if not converged:
        warnings.warn(
            f"logistic solver stopped at gradient norm {np.max(np.abs(grad)):.2e} > {tol:.0e}",
            ConvergenceWarning,
        )
    return c, {
        "n_iter": len(history) - 1,
        "converged": bool(converged),
        "objective_history": history,
        "grad_norm": float(np.max(np.abs(grad))),
    }


def _fit_hinge(K, y, mu, theta=1.0, max_iter=4000, tol=1e-6):
    # Dual of the no-intercept hinge problem: maximize
    #   sum(alpha) - (theta^2 / 4 mu) (alpha*y)' K (alpha*y),  0 <= alpha <= 1/n.
    # Exact coordinate maximization, ascending index order; the recorded
    # objective is the negated dual, which decreases monotonically.
    n = len(y)
    ub = 1.0 / n
    alpha = np.zeros(n)
    c = np.zeros(n)          # c = (theta / 2 mu) * alpha * y
    f = np.zeros(n)          # f = K c
    diag = np.diag(K).copy()
    coef = theta / (2.0 * mu)
    history = []
    kkt = np.inf
    sweeps = 0
    active = np.arange(n)
    for sweep in range(max_iter):
        sweeps = sweep + 1
        full = sweep % 10 == 0 or len(active) == 0
        idx = np.arange(n) if full else active
        for i in idx:
            grad = 1.0 - theta * y[i] * f[i]
            if diag[i] > 1e-14:
                target = alpha[i] + grad / (coef * theta * diag[i])
            else:
                target = ub if grad > 0 else 0.0
            target = min(max(target, 0.0), ub)
            delta = target - alpha[i]
            if delta != 0.0:
                alpha[i] = target
                step = coef * delta * y[i]
                c[i] += step
                f += step * K[:, i]
        grad_all = 1.0 - theta * y * f
        viol = np.where(
            alpha <= 0.0,
            np.maximum(grad_all, 0.0),
            np.where(alpha >= ub, np.maximum(-grad_all, 0.0), np.abs(grad_all)),
        )
        kkt = float(np.max(viol)) if n else 0.0
        history.append(-(np.sum(alpha) - mu * (c @ f)))
        if kkt <= tol:
            break
        if full:
            active = np.flatnonzero(viol > 0.1 * tol)
    converged = kkt <= tol
    if not converged:
        warnings.warn(f"hinge solver stopped at KKT violation {kkt:.2e} > {tol:.0e}", ConvergenceWarning)
    return c, {
        "n_iter": sweeps,
        "converged": bool(converged),
        "objective_history": history,
        "kkt_violation": kkt,
    }


def fit(ts, loss, mu, max_iter=None, tol=None):
    """Fit the regularized margin classifier; see the module docstring for the
    objective and per-cost solver."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if loss.kind not in ("squared", "logistic", "hinge"):
        raise ValueError(f"no solver for loss kind {loss.kind!r}")
    mask = ts.labeled_mask
    Kll = ts.gram[np.ix_(mask, mask)]
    yl = ts.labels[mask]
    kwargs = {}
    if max_iter is not None:
        kwargs["max_iter"] = max_iter
    if tol is not None:
        kwargs["tol"] = tol
    if loss.kind == "squared":
        cl, diag = _fit_squared(Kll, yl, mu)
    elif loss.kind == "logistic":
        cl, diag = _fit_logistic(Kll, yl, mu, **kwargs)
    else:
        cl, diag = _fit_hinge(Kll, yl, mu, theta=loss.theta, **kwargs)
    c = np.zeros(ts.n)
    c[mask] = cl
    if loss.kind != "squared":
        c = _project_range(ts.gram, c)
    f = ts.gram @ c
    obj = float(np.mean(_data_cost(loss, yl * f[mask])) + mu * (c @ f))
    diag["penalty"] = "rkhs"
    return ClassifierModel(
        coefficients=c,
        mu=mu,
        loss=loss,
        labeled_mask=mask,
        gram=ts.gram,
        kernel=ts.kernel,
        points=ts.points,
        objective=obj,
        penalty="rkhs",
        diagnostics=diag,
    )


def fit_l1(ts, mu1, max_iter=10000, tol=1e-10):
    """Sparse squared-loss fit: mean squared residual plus mu1 * sum|c_l|,
    solved by cyclic coordinate descent with soft-thresholding."""
    if not mu1 > 0:
        raise ValueError(f"mu1 must be positive, got {mu1}")
    mask = ts.labeled_mask
    K = ts.gram
    n = ts.n
    nl = int(np.sum(mask))
    Kl = K[mask, :]                      # labeled rows, all columns
    yl = ts.labels[mask]
    col_sq = 2.0 / nl * np.einsum("ij,ij->j", Kl, Kl)
    c = np.zeros(n)
    resid = yl.copy()                    # y - K c on labeled rows
    history = [float(np.mean(resid**2))]
    converged = False
    sweeps = 0
    for sweep in range(max_iter):
        sweeps = sweep + 1
        max_change = 0.0
        for j in range(n):
            if col_sq[j] <= 1e-300:
                new = 0.0
            else:
                rho = 2.0 / nl * (Kl[:, j] @ resid) + col_sq[j] * c[j]
                new = np.sign(rho) * max(abs(rho) - mu1, 0.0) / col_sq[j]
            delta = new - c[j]
            if delta != 0.0:
                resid -= delta * Kl[:, j]
                c[j] = new
                max_change = max(max_change, abs(delta))
        history.append(float(np.mean(resid**2) + mu1 * np.sum(np.abs(c))))
        if max_change <= tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"l1 coordinate descent hit the sweep limit ({max_iter})", ConvergenceWarning)
    obj = float(np.mean(resid**2) + mu1 * np.sum(np.abs(c)))
    diag = {
        "n_iter": sweeps,
        "converged": bool(converged),
        "objective_history": history[1:],
        "n_zero": int(np.sum(c == 0.0)),
        "penalty": "l1",
    }
    return ClassifierModel(
        coefficients=c,
        mu=mu1,
        loss=MarginLoss("squared"),
        labeled_mask=mask,
        gram=K,
        kernel=ts.kernel,
        points=ts.points,
        objective=obj,
        penalty="l1",
        diagnostics=diag,
    )


def decision_from_gram_row(model, row):
    """Decision value from an explicit row of kernel values to the training objects."""
    row = np.asarray(row, dtype=float)
    if row.shape != (model.n,):
        raise ValueError(f"gram row must have length {model.n}, got {row.shape}")
    return float(row @ model.coefficients)


def decision_value(model, obj):
    """f at a training index, or at a new attribute vector (kernel models only)."""
    if isinstance(obj, (int, np.integer)):
        i = int(obj)
        if model.gram is not None:
            return decision_from_gram_row(model, model.gram[i])
        return decision_from_gram_row(model, model.kernel.cross(model.points[i : i + 1], model.points)[0])
    if model.kernel is None or model.points is None:
        raise ValueError("abstract-object model: supply the gram row to the query instead")
    v = np.asarray(obj, dtype=float)
    return decision_from_gram_row(model, model.kernel.cross(v[None, :], model.points)[0])


def classify(model, obj):
    """Sign of the decision value; an exact 0 classifies as +1."""
    return 1 if decision_value(model, obj) >= 0.0 else -1


def probability_from_logit(f):
    """exp(f) / (1 + exp(f)), overflow-safe; sensible only for logistic fits."""
    out = _sigmoid(np.asarray(f, dtype=float))
    return float(out[0]) if np.ndim(f) == 0 else out


def serialize_model(model):
    """Full-precision JSON round-trip; parse(serialize(m)) reproduces decision
    values bit for bit."""
    doc = {
        "format": MODEL_FORMAT,
        "n": model.n,
        "mu": model.mu,
        "loss": {"kind": model.loss.kind, "theta": model.loss.theta},
        "penalty": model.penalty,
        "objective": None if np.isnan(model.objective) else model.objective,
        "coefficients": model.coefficients.tolist(),
        "labeled_mask": [bool(b) for b in model.labeled_mask],
        "kernel": None if model.kernel is None else {"kind": model.kernel.kind, "width": model.kernel.width},
        "points": None if model.points is None else model.points.tolist(),
        "gram": None if model.gram is None else model.gram.tolist(),
    }
    return json.dumps(doc, indent=1)


def parse_model(text):
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unrecognized model format {doc.get('format')!r}")
    kernel = None if doc["kernel"] is None else Kernel(doc["kernel"]["kind"], doc["kernel"]["width"])
    return ClassifierModel(
        coefficients=np.asarray(doc["coefficients"], dtype=float),
        mu=doc["mu"],
        loss=MarginLoss(doc["loss"]["kind"], theta=doc["loss"]["theta"]),
        labeled_mask=np.asarray(doc["labeled_mask"], dtype=bool),
        gram=None if doc["gram"] is None else np.asarray(doc["gram"], dtype=float),
        kernel=kernel,
        points=None if doc["points"] is None else np.asarray(doc["points"], dtype=float),
        objective=np.nan if doc["objective"] is None else doc["objective"],
        penalty=doc.get("penalty", "rkhs"),
    )


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(model) + "\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


class KernelMarginClassifier(BaseEstimator, ClassifierMixin):
    """Margin-loss kernel classifier with the sklearn estimator API.

    Parameters
    ----------
    loss : "hinge" | "logistic" | "squared"
        Margin cost to minimize.
    mu : float
        Regularization weight on the squared kernel norm (or on sum|c| when
        ``penalty="l1"``).
    kernel : "gaussian" | "linear" | "precomputed"
        With "precomputed", ``fit`` and the prediction methods take Gram
        blocks instead of attribute vectors.
    width : float
        Gaussian kernel width.
    theta : float
        Hinge steepness.
    penalty : "rkhs" | "l1"
        "l1" requires ``loss="squared"`` and fits the sparse model.
    """

    def __init__(self, loss="hinge", mu=0.1, kernel="gaussian", width=1.0,
                 theta=1.0, penalty="rkhs", max_iter=None, tol=None):
        self.loss = loss
        self.mu = mu
        self.kernel = kernel
        self.width = width
        self.theta = theta
        self.penalty = penalty
        self.max_iter = max_iter
        self.tol = tol

    def _training_set(self, X, y):
        if self.kernel == "precomputed":
            return TrainingSet.from_gram(X, y)
        return TrainingSet.from_points(X, y, Kernel(self.kernel, self.width))

    def fit(self, X, y):
        ts = self._training_set(X, np.asarray(y, dtype=float))
        if self.penalty == "l1":
            if self.loss != "squared":
                raise ValueError("penalty='l1' requires loss='squared'")
            kwargs = {k: v for k, v in (("max_iter", self.max_iter), ("tol", self.tol)) if v is not None}
            self.model_ = fit_l1(ts, self.mu, **kwargs)
        elif self.penalty == "rkhs":
            self.model_ = fit(ts, MarginLoss(self.loss, theta=self.theta), self.mu,
                              max_iter=self.max_iter, tol=self.tol)
        else:
            raise ValueError(f"unknown penalty {self.penalty!r}")
        self.coef_ = self.model_.coefficients
        self.objective_ = self.model_.objective
        self.n_iter_ = self.model_.diagnostics.get("n_iter", 1)
        self.classes_ = np.array([-1.0, 1.0])
        return self

    def decision_function(self, X):
        model = self.model_
        if self.kernel == "precomputed":
            rows = np.asarray(X, dtype=float)
            if rows.ndim != 2 or rows.shape[1] != model.n:
                raise ValueError(f"expected gram rows of width {model.n}")
            return rows @ model.coefficients
        X = check_points(X)
        return model.kernel.cross(X, model.points) @ model.coefficients

    def predict(self, X):
        f = self.decision_function(X)
        return np.where(f >= 0.0, 1.0, -1.0)

    def predict_proba(self, X):
        if self.loss != "logistic":
            raise ValueError("probabilities are defined for loss='logistic' only")
        p = probability_from_logit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])
