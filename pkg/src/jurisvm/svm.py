"""One-vs-rest linear SVM training with calibrated probability outputs.

Training runs dual coordinate descent (see `_dualcd`) once per class
against the rest, with the bias handled as an appended constant-1 feature.
Probability estimates come from per-class Platt sigmoids fit on an
internal stratified 80/20 holdout carved out of the training data, then
renormalized across classes; a cheaper softmax-over-decision-values mode
exists for ablation.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from . import _dualcd
from .corpus import LabelScheme
from .errors import InputError
from .features import SparseVector, to_csr_row
from .seeding import derive_seed

log = logging.getLogger(__name__)

LOSSES = ("hinge_l1", "hinge_l2")

_PROB_FLOOR = 1e-15


@dataclass(frozen=True)
class TrainParams:
    """Solver settings; defaults are the conventional ones for this family."""

    C: float = 1.0
    loss: str = "hinge_l2"
    tol: float = 1e-4
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise InputError(f"C must be positive, got {self.C}")
        if self.loss not in LOSSES:
            raise InputError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.tol <= 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter}")

    def to_dict(self) -> dict:
        return {"C": self.C, "loss": self.loss, "tol": self.tol, "max_iter": self.max_iter, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainParams":
        return cls(**d)


@dataclass
class BinarySolution:
    """Result of one binary solve (weights include the appended bias slot)."""

    w: np.ndarray
    alpha: np.ndarray
    passes: int
    converged: bool
    degenerate: bool = False
    max_bound_violation: float = 0.0
    objective_history: Optional[np.ndarray] = None


def _as_csr64(X) -> sparse.csr_matrix:
    X = sparse.csr_matrix(X)
    return sparse.csr_matrix(
        (X.data.astype(np.float64), X.indices.astype(np.int32), X.indptr.astype(np.int64)),
        shape=X.shape,
    )


def train_binary(
    X: sparse.spmatrix,
    y: np.ndarray,
    params: TrainParams,
    record_history: bool = False,
) -> BinarySolution:
    """Solve one binary problem with labels in {-1, +1}.

    Single-class input yields the zero vector with the degenerate flag set;
    the one-vs-rest caller decides what to do with it.
    """
    X = _as_csr64(X)
    if X.shape[0] == 0:
        raise InputError("empty training matrix")
    if not np.all(np.isfinite(X.data)):
        raise InputError("feature matrix contains non-finite values")
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != X.shape[0]:
        raise InputError(f"label length {y.shape[0]} != row count {X.shape[0]}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InputError("labels must be -1 or +1")
    if np.all(y == y[0]):
        return BinarySolution(
            w=np.zeros(X.shape[1]),
            alpha=np.zeros(X.shape[0]),
            passes=0,
            converged=True,
            degenerate=True,
        )
    w, alpha, passes, converged, violation, history = _dualcd.solve(
        X.data,
        X.indices,
        X.indptr,
        y,
        X.shape[1],
        float(params.C),
        params.loss == "hinge_l2",
        float(params.tol),
        int(params.max_iter),
        int(params.seed) & 0xFFFFFFFF,
        bool(record_history),
    )
    return BinarySolution(
        w=w,
        alpha=alpha,
        passes=passes,
        converged=bool(converged),
        max_bound_violation=float(violation),
        # Copy: the kernel returns a slice into its max_iter*n scratch buffer.
        objective_history=np.array(history) if record_history else None,
    )


def primal_objective(X, y, w: np.ndarray, C: float, loss: str) -> float:
    """0.5*||w||^2 + C * sum of (squared) hinge losses. Diagnostic helper."""
    X = _as_csr64(X)
    margins = np.asarray(y, dtype=np.float64) * (X @ w)
    slack = np.maximum(0.0, 1.0 - margins)
    if loss == "hinge_l2":
        slack = slack**2
    return 0.5 * float(w @ w) + C * float(slack.sum())


def dual_objective(X, y, alpha: np.ndarray, C: float, loss: str) -> float:
    """Dual maximization objective at `alpha`. Diagnostic helper."""
    X = _as_csr64(X)
    y = np.asarray(y, dtype=np.float64)
    w = X.T @ (alpha * y)
    val = float(alpha.sum()) - 0.5 * float(w @ w)
    if loss == "hinge_l2":
        val -= float(alpha @ alpha) / (4.0 * C)
    return val


# ---------------------------------------------------------------------------
# one-vs-rest


@dataclass
class LinearModel:
    """Per-class weight vectors and biases, in scheme class order."""

    classes: tuple[str, ...]
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    degenerate_classes: tuple[str, ...] = ()
    non_converged: tuple[str, ...] = ()

    @property
    def dims(self) -> int:
        return self.weights.shape[1]


def _augment_bias(X: sparse.csr_matrix) -> sparse.csr_matrix:
    ones = sparse.csr_matrix(np.ones((X.shape[0], 1)))
    return _as_csr64(sparse.hstack([X, ones], format="csr"))


def train_ovr(
    X: sparse.spmatrix,
    labels: Sequence[str],
    scheme: LabelScheme,
    params: TrainParams,
    jobs: int = 1,
) -> LinearModel:
    """Train one binary classifier per scheme class against the rest."""
    X = _as_csr64(X)
    present = set(labels)
    unknown = present - set(scheme.classes)
    if unknown:
        raise InputError(f"labels not in scheme: {sorted(unknown)}")
    if len(present) < 2:
        raise InputError("one-vs-rest needs at least 2 distinct classes in the labels")

    X_aug = _augment_bias(X)
    label_arr = np.asarray(labels)

    def solve_class(cls_name: str) -> BinarySolution:
        y = np.where(label_arr == cls_name, 1.0, -1.0)
        cls_params = TrainParams(
            C=params.C,
            loss=params.loss,
            tol=params.tol,
            max_iter=params.max_iter,
            seed=derive_seed(params.seed, "ovr", cls_name),
        )
        return train_binary(X_aug, y, cls_params)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            solutions = list(pool.map(solve_class, scheme.classes))
    else:
        solutions = [solve_class(c) for c in scheme.classes]

    weights = np.vstack([s.w[:-1] for s in solutions])
    bias = np.asarray([s.w[-1] for s in solutions])
    degenerate = tuple(c for c, s in zip(scheme.classes, solutions) if s.degenerate)
    stuck = tuple(c for c, s in zip(scheme.classes, solutions) if not s.converged)
    if stuck:
        log.warning("solver hit max_iter without converging for class(es): %s", ", ".join(stuck))
    return LinearModel(
        classes=tuple(scheme.classes),
        weights=weights,
        bias=bias,
        degenerate_classes=degenerate,
        non_converged=stuck,
    )


def decision_values(model: LinearModel, x: SparseVector) -> np.ndarray:
    """Per-class scores <w_c, x> + bias_c, in scheme class order."""
    if x.dims != model.dims:
        raise InputError(f"input has {x.dims} dims, model expects {model.dims}")
    scores = model.bias.copy()
    for idx, weight in x.pairs:
        scores += model.weights[:, idx] * weight
    return scores


def decision_matrix(model: LinearModel, X: sparse.spmatrix) -> np.ndarray:
    X = _as_csr64(X)
    if X.shape[1] != model.dims:
        raise InputError(f"input has {X.shape[1]} dims, model expects {model.dims}")
    return X @ model.weights.T + model.bias


# ---------------------------------------------------------------------------
# Platt calibration


def fit_platt_sigmoid(
    scores: np.ndarray,
    positive: np.ndarray,
    max_iter: int = 100,
    min_step: float = 1e-10,
    ridge: float = 1e-12,
) -> tuple[float, float]:
    """Fit p(s) = 1 / (1 + exp(A*s + B)) by regularized maximum likelihood.

    Targets are smoothed to (N+ + 1)/(N+ + 2) and 1/(N- + 2); optimization
    is Newton with backtracking on the stably-evaluated cross entropy.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    if scores.shape != positive.shape or scores.size == 0:
        raise InputError("scores and positive flags must be equal-length and non-empty")
    n_pos = int(positive.sum())
    n_neg = scores.size - n_pos
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(positive, hi, lo)

    def nll(a: float, b: float) -> float:
        z = a * scores + b
        pos_z = z >= 0
        vals = np.where(
            pos_z,
            t * z + np.log1p(np.exp(-np.abs(z))),
            (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))),
        )
        return float(vals.sum())

    A = 0.0
    B = math.log((n_neg + 1.0) / (n_pos + 1.0))
    f = nll(A, B)
    for _ in range(max_iter):
        z = A * scores + B
        p = expit(-z)
        d2 = p * (1.0 - p)
        h11 = float(np.dot(scores * scores, d2)) + ridge
        h22 = float(d2.sum()) + ridge
        h21 = float(np.dot(scores, d2))
        g1 = float(np.dot(scores, t - p))
        g2 = float((t - p).sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            nA, nB = A + step * dA, B + step * dB
            nf = nll(nA, nB)
            if nf < f + 1e-4 * step * gd:
                A, B, f = nA, nB, nf
                break
            step /= 2.0
        else:
            log.debug("platt line search stalled; keeping last iterate")
            break
    return A, B


@dataclass
class CalibratedModel:
    """Linear model plus per-class sigmoid calibration.

    platt_a/platt_b hold the per-class sigmoid parameters; both None means
    the softmax-over-decision-values ablation mode.
    """

    base: LinearModel
    platt_a: Optional[np.ndarray] = None
    platt_b: Optional[np.ndarray] = None

    @property
    def classes(self) -> tuple[str, ...]:
        return self.base.classes

    @property
    def dims(self) -> int:
        return self.base.dims


def calibrate(model: LinearModel, X_holdout, labels_holdout: Sequence[str]) -> CalibratedModel:
    """Fit per-class Platt sigmoids on holdout decision scores.

    The holdout must be disjoint from the data the weights were fit on. A
    class without positives in the holdout gets the fixed smoothed sigmoid
    p = 1/(N+2).
    """
    scores = decision_matrix(model, X_holdout)
    labels = np.asarray(labels_holdout)
    n = scores.shape[0]
    a = np.zeros(len(model.classes))
    b = np.zeros(len(model.classes))
    for ci, cls_name in enumerate(model.classes):
        positive = labels == cls_name
        if not positive.any():
            log.warning("class %r has no positives in the calibration holdout; using fixed sigmoid", cls_name)
            a[ci] = 0.0
            b[ci] = math.log(n + 1.0)
            continue
        a[ci], b[ci] = fit_platt_sigmoid(scores[:, ci], positive)
    return CalibratedModel(base=model, platt_a=a, platt_b=b)


def _probs_from_scores(cm: CalibratedModel, scores: np.ndarray) -> np.ndarray:
    if cm.platt_a is not None:
        p = expit(-(cm.platt_a * scores + cm.platt_b))
    else:
        shifted = scores - scores.max(axis=-1, keepdims=True)
        p = np.exp(shifted)
    p = np.clip(p, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


def predict_proba(cm: CalibratedModel, x: SparseVector) -> np.ndarray:
    """Probability vector over classes: sigmoids renormalized to sum to 1."""
    return _probs_from_scores(cm, decision_values(cm.base, x))


def predict_proba_matrix(cm: CalibratedModel, X: sparse.spmatrix) -> np.ndarray:
    return _probs_from_scores(cm, decision_matrix(cm.base, X))


# ---------------------------------------------------------------------------
# full trainer: OvR weights + calibration from one training set


def stratified_holdout_split(labels: Sequence[str], seed: int) -> tuple[list[int], list[int]]:
    """Deterministic stratified 80/20 split; returns (train_idx, holdout_idx).

    Classes with a single instance stay entirely in the training side (a
    lone positive is worth more to the weights than to the sigmoid).
    """
    by_class: dict[str, list[int]] = defaultdict(list)
    for i, lab in enumerate(labels):
        by_class[lab].append(i)
    train_idx: list[int] = []
    hold_idx: list[int] = []
    for cls_name in sorted(by_class):
        idxs = by_class[cls_name]
        rng = np.random.default_rng(derive_seed(seed, "calibration-holdout", cls_name))
        order = rng.permutation(len(idxs))
        n_hold = max(1, len(idxs) // 5) if len(idxs) >= 2 else 0
        hold_idx.extend(idxs[j] for j in order[:n_hold])
        train_idx.extend(idxs[j] for j in order[n_hold:])
    return sorted(train_idx), sorted(hold_idx)


def train_calibrated_ovr(
    X: sparse.spmatrix,
    labels: Sequence[str],
    scheme: LabelScheme,
    params: TrainParams,
    calibration: str = "platt",
    jobs: int = 1,
) -> CalibratedModel:
    """Carve the 80/20 split, fit weights on the 80, calibrate on the 20."""
    if calibration == "softmax":
        return CalibratedModel(base=train_ovr(X, labels, scheme, params, jobs=jobs))
    if calibration != "platt":
        raise InputError(f"unknown calibration mode {calibration!r}")
    X = _as_csr64(X)
    train_idx, hold_idx = stratified_holdout_split(labels, params.seed)
    labels_arr = np.asarray(labels)
    model = train_ovr(X[train_idx], list(labels_arr[train_idx]), scheme, params, jobs=jobs)
    if not hold_idx:
        log.warning("no calibration holdout could be carved; falling back to softmax probabilities")
        return CalibratedModel(base=model)
    return calibrate(model, X[hold_idx], list(labels_arr[hold_idx]))


# ---------------------------------------------------------------------------
# persistence (JSON-able dicts; float round-trips are exact)


def model_to_dict(cm: CalibratedModel, params: TrainParams | None = None) -> dict:
    return {
        "classes": list(cm.base.classes),
        "weights": cm.base.weights.tolist(),
        "bias": cm.base.bias.tolist(),
        "degenerate_classes": list(cm.base.degenerate_classes),
        "non_converged": list(cm.base.non_converged),
        "platt_a": cm.platt_a.tolist() if cm.platt_a is not None else None,
        "platt_b": cm.platt_b.tolist() if cm.platt_b is not None else None,
        "train_params": params.to_dict() if params is not None else None,
    }


def model_from_dict(d: dict) -> CalibratedModel:
    base = LinearModel(
        classes=tuple(d["classes"]),
        weights=np.asarray(d["weights"], dtype=np.float64),
        bias=np.asarray(d["bias"], dtype=np.float64),
        degenerate_classes=tuple(d.get("degenerate_classes", ())),
        non_converged=tuple(d.get("non_converged", ())),
    )
    platt_a = d.get("platt_a")
    platt_b = d.get("platt_b")
    return CalibratedModel(
        base=base,
        platt_a=np.asarray(platt_a, dtype=np.float64) if platt_a is not None else None,
        platt_b=np.asarray(platt_b, dtype=np.float64) if platt_b is not None else None,
    )
