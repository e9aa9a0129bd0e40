"""Stratified cross-validation, confusion matrices, and P/R/F1 reporting.

Folds are dealt round-robin per class after a seeded shuffle, so every
class spreads across folds with counts differing by at most one. Each
fold refits vocabularies, idf tables, and models from scratch on its
training side only; the test fold never touches fitting, and that is
checked, not assumed.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import LabelScheme, Task
from .ensemble import (
    DEFAULT_MEMBER_SPECS,
    MemberSpec,
    member_probabilities,
    mean_probability,
    train_ensemble,
)
from .errors import InputError, LeakageError
from .fileio import atomic_write_text, write_json
from .seeding import derive_seed
from .svm import TrainParams


def stratified_folds(labels: Sequence[str], k: int, seed: int) -> list[list[int]]:
    """Split indices into k folds preserving class balance.

    Per class, indices are shuffled with a class-derived seed and dealt
    round-robin starting at a class-dependent offset, which staggers the
    remainder documents across folds instead of piling them on fold 0.
    """
    n = len(labels)
    if k < 2:
        raise InputError(f"need at least 2 folds, got {k}")
    if k > n:
        raise InputError(f"cannot make {k} folds from {n} documents")
    by_class: dict[str, list[int]] = defaultdict(list)
    for i, lab in enumerate(labels):
        by_class[lab].append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    for ci, cls_name in enumerate(sorted(by_class)):
        idxs = by_class[cls_name]
        rng = np.random.default_rng(derive_seed(seed, "fold-split", cls_name))
        order = rng.permutation(len(idxs))
        for j, pos in enumerate(order):
            folds[(ci + j) % k].append(idxs[pos])
    return [sorted(f) for f in folds]


def confusion_matrix(true: Sequence[str], pred: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    """(n_classes, n_classes) count matrix; rows are true, columns predicted."""
    if len(true) != len(pred):
        raise InputError(f"true/pred length mismatch: {len(true)} vs {len(pred)}")
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true, pred):
        if t not in index:
            raise InputError(f"true label {t!r} not in class list")
        if p not in index:
            raise InputError(f"predicted label {p!r} not in class list")
        cm[index[t], index[p]] += 1
    return cm


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


@dataclass(frozen=True)
class MetricsSummary:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: tuple[ClassMetrics, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class": [c.to_dict() for c in self.per_class],
        }


def compute_metrics(cm: np.ndarray, classes: Sequence[str]) -> MetricsSummary:
    """Per-class precision/recall/F1 plus macro and support-weighted averages.

    Zero denominators yield 0 rather than NaN. Weighted recall equals
    accuracy by construction; both are still computed independently so
    tests can confirm the identity instead of trusting it.
    """
    cm = np.asarray(cm, dtype=np.int64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] != len(classes):
        raise InputError(f"confusion matrix shape {cm.shape} does not match {len(classes)} classes")
    total = int(cm.sum())
    if total == 0:
        raise InputError("confusion matrix is empty")
    per_class = []
    for i, cls_name in enumerate(classes):
        tp = float(cm[i, i])
        col = float(cm[:, i].sum())
        row = float(cm[i, :].sum())
        precision = tp / col if col > 0 else 0.0
        recall = tp / row if row > 0 else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassMetrics(cls_name, precision, recall, f1, int(row)))
    k = len(per_class)
    macro_p = sum(c.precision for c in per_class) / k
    macro_r = sum(c.recall for c in per_class) / k
    macro_f = sum(c.f1 for c in per_class) / k
    weighted_p = sum(c.precision * c.support for c in per_class) / total
    weighted_r = sum(c.recall * c.support for c in per_class) / total
    weighted_f = sum(c.f1 * c.support for c in per_class) / total
    accuracy = float(np.trace(cm)) / total
    return MetricsSummary(
        accuracy=accuracy,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        weighted_precision=weighted_p,
        weighted_recall=weighted_r,
        weighted_f1=weighted_f,
        per_class=tuple(per_class),
    )


# ---------------------------------------------------------------------------
# cross-validation driver


@dataclass
class CVResult:
    task: Task
    scheme: LabelScheme
    k: int
    seed: int
    params: TrainParams
    member_specs: tuple[MemberSpec, ...]
    fold_sizes: tuple[int, ...]
    predictions: list[str]
    true_labels: list[str]
    pooled_cm: np.ndarray
    pooled: MetricsSummary
    per_fold: tuple[MetricsSummary, ...]
    per_member_pooled: dict[str, MetricsSummary]
    non_converged: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "scheme": self.scheme.to_dict(),
            "folds": self.k,
            "seed": self.seed,
            "train_params": self.params.to_dict(),
            "members": [s.to_dict() for s in self.member_specs],
            "fold_sizes": list(self.fold_sizes),
            "confusion_matrix": self.pooled_cm.tolist(),
            "pooled": self.pooled.to_dict(),
            "per_fold": [m.to_dict() for m in self.per_fold],
            "per_member_pooled": {name: m.to_dict() for name, m in self.per_member_pooled.items()},
            "non_converged": list(self.non_converged),
        }


def run_cv(
    texts: Sequence[str],
    labels: Sequence[str],
    doc_ids: Sequence[str],
    task: Task,
    scheme: LabelScheme,
    params: TrainParams,
    k: int = 10,
    member_specs: Sequence[MemberSpec] = DEFAULT_MEMBER_SPECS,
    calibration: str = "platt",
    jobs: int = 1,
) -> CVResult:
    """k-fold cross-validation of the mean-probability ensemble.

    Every fold refits everything on its own training side. Before scoring
    a fold, each member vocabulary's recorded fit ids are checked against
    the test fold's ids; any overlap raises LeakageError.
    """
    n = len(texts)
    if not (len(labels) == len(doc_ids) == n):
        raise InputError("texts, labels and doc_ids must be equal length")
    folds = stratified_folds(labels, k, seed=derive_seed(params.seed, "cv"))
    predictions: list[Optional[str]] = [None] * n
    member_predictions: dict[str, list[Optional[str]]] = {s.name: [None] * n for s in member_specs}
    per_fold: list[MetricsSummary] = []
    non_converged: set[str] = set()
    for fi, test_idx in enumerate(folds):
        test_set = set(test_idx)
        train_idx = [i for i in range(n) if i not in test_set]
        fold_params = TrainParams(
            C=params.C,
            loss=params.loss,
            tol=params.tol,
            max_iter=params.max_iter,
            seed=derive_seed(params.seed, "cv-fold", str(fi)),
        )
        model = train_ensemble(
            [texts[i] for i in train_idx],
            [labels[i] for i in train_idx],
            task,
            scheme,
            fold_params,
            member_specs=member_specs,
            calibration=calibration,
            jobs=jobs,
            doc_ids=[doc_ids[i] for i in train_idx],
        )
        test_ids = frozenset(doc_ids[i] for i in test_idx)
        for member in model.members:
            if member.vocabulary.fit_ids is None:
                raise LeakageError(
                    f"fold {fi}: member {member.spec.name!r} vocabulary recorded no fit ids; "
                    "cannot verify train/test separation"
                )
            overlap = member.vocabulary.fit_ids & test_ids
            if overlap:
                raise LeakageError(
                    f"fold {fi}: member {member.spec.name!r} vocabulary was fit on "
                    f"test documents {sorted(overlap)[:5]}"
                )
            for cls_name in member.model.base.non_converged:
                non_converged.add(f"fold{fi}/{member.spec.name}/{cls_name}")
        test_texts = [texts[i] for i in test_idx]
        probs_by_member = [member_probabilities(m, test_texts) for m in model.members]
        fold_probs = mean_probability(probs_by_member)
        fold_picks = fold_probs.argmax(axis=1)
        for j, i in enumerate(test_idx):
            predictions[i] = scheme.classes[fold_picks[j]]
        for member, probs in zip(model.members, probs_by_member):
            picks = probs.argmax(axis=1)
            for j, i in enumerate(test_idx):
                member_predictions[member.spec.name][i] = scheme.classes[picks[j]]
        fold_cm = confusion_matrix(
            [labels[i] for i in test_idx],
            [predictions[i] for i in test_idx],
            scheme.classes,
        )
        per_fold.append(compute_metrics(fold_cm, scheme.classes))
    assert all(p is not None for p in predictions)
    pooled_cm = confusion_matrix(list(labels), predictions, scheme.classes)
    per_member_pooled = {
        name: compute_metrics(confusion_matrix(list(labels), preds, scheme.classes), scheme.classes)
        for name, preds in member_predictions.items()
    }
    return CVResult(
        task=task,
        scheme=scheme,
        k=k,
        seed=params.seed,
        params=params,
        member_specs=tuple(member_specs),
        fold_sizes=tuple(len(f) for f in folds),
        predictions=list(predictions),
        true_labels=list(labels),
        pooled_cm=pooled_cm,
        pooled=compute_metrics(pooled_cm, scheme.classes),
        per_fold=tuple(per_fold),
        per_member_pooled=per_member_pooled,
        non_converged=tuple(sorted(non_converged)),
    )


# ---------------------------------------------------------------------------
# report rendering


def format_text_report(result: CVResult) -> str:
    """Fixed-width human-readable summary of a cross-validation run."""
    out = io.StringIO()
    out.write(f"task: {result.task.value}\n")
    out.write(f"folds: {result.k}  seed: {result.seed}  documents: {len(result.true_labels)}\n")
    out.write(f"members: {', '.join(s.name for s in result.member_specs)}\n")
    out.write("\n")
    width = max(len(c.label) for c in result.pooled.per_class)
    width = max(width, len("class"))
    out.write(f"{'class':<{width}}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>8}\n")
    for c in result.pooled.per_class:
        out.write(f"{c.label:<{width}}  {c.precision:>9.4f}  {c.recall:>9.4f}  {c.f1:>9.4f}  {c.support:>8d}\n")
    out.write("\n")
    p = result.pooled
    out.write(f"accuracy:          {p.accuracy:.4f}\n")
    out.write(f"macro    P/R/F1:   {p.macro_precision:.4f} / {p.macro_recall:.4f} / {p.macro_f1:.4f}\n")
    out.write(f"weighted P/R/F1:   {p.weighted_precision:.4f} / {p.weighted_recall:.4f} / {p.weighted_f1:.4f}\n")
    out.write("\nper-member weighted F1 (pooled):\n")
    for name in sorted(result.per_member_pooled):
        out.write(f"  {name}: {result.per_member_pooled[name].weighted_f1:.4f}\n")
    if result.non_converged:
        out.write(f"\nnon-converged solves: {len(result.non_converged)}\n")
        for item in result.non_converged:
            out.write(f"  {item}\n")
    return out.getvalue()


def format_csv_report(result: CVResult) -> str:
    """Per-class rows plus macro/weighted/accuracy aggregate rows."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["class", "precision", "recall", "f1", "support"])
    p = result.pooled
    for c in p.per_class:
        writer.writerow([c.label, repr(c.precision), repr(c.recall), repr(c.f1), c.support])
    total = sum(c.support for c in p.per_class)
    writer.writerow(["macro", repr(p.macro_precision), repr(p.macro_recall), repr(p.macro_f1), total])
    writer.writerow(["weighted", repr(p.weighted_precision), repr(p.weighted_recall), repr(p.weighted_f1), total])
    writer.writerow(["accuracy", "", "", repr(p.accuracy), total])
    return out.getvalue()


def write_report(result: CVResult, directory: str | Path, stem: str = "report") -> dict[str, Path]:
    """Write the JSON, text, and CSV renderings of one report."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": directory / f"{stem}.json",
        "text": directory / f"{stem}.txt",
        "csv": directory / f"{stem}.csv",
    }
    write_json(paths["json"], result.to_dict())
    atomic_write_text(paths["text"], format_text_report(result))
    atomic_write_text(paths["csv"], format_csv_report(result))
    return paths
