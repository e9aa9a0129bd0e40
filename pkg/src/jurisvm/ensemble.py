"""Mean-probability ensembling of calibrated linear classifiers.

Each member owns its featurization (n-gram range, weighting, vocabulary,
idf table) and a calibrated one-vs-rest model. Prediction averages the
members' probability vectors entry-wise and takes the argmax, resolving
ties toward the lowest class index. The default lineup is three members:
word unigram counts, unigram+bigram counts, and unigram+bigram tf-idf.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import LabelScheme, Task
from .errors import InputError, IntegrityError
from .features import (
    IdfWeights,
    Vocabulary,
    build_vocabulary,
    fit_idf,
    tokenize,
    vectorize_corpus,
)
from .fileio import read_json, sha256_file, write_json
from .svm import (
    CalibratedModel,
    TrainParams,
    model_from_dict,
    model_to_dict,
    predict_proba_matrix,
    train_calibrated_ovr,
)
from .seeding import derive_seed

MANIFEST_NAME = "ensemble.json"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class MemberSpec:
    """Featurization recipe for one ensemble member."""

    name: str
    ngram_range: tuple[int, int] = (1, 1)
    weighting: str = "counts"
    min_df: int = 2

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ngram_range": list(self.ngram_range),
            "weighting": self.weighting,
            "min_df": self.min_df,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemberSpec":
        return cls(
            name=d["name"],
            ngram_range=tuple(d["ngram_range"]),
            weighting=d["weighting"],
            min_df=d["min_df"],
        )


DEFAULT_MEMBER_SPECS = (
    MemberSpec(name="unigram-counts", ngram_range=(1, 1), weighting="counts"),
    MemberSpec(name="bigram-counts", ngram_range=(1, 2), weighting="counts"),
    MemberSpec(name="bigram-tfidf", ngram_range=(1, 2), weighting="tfidf"),
)


@dataclass
class EnsembleMember:
    spec: MemberSpec
    vocabulary: Vocabulary
    idf: Optional[IdfWeights]
    model: CalibratedModel


@dataclass
class EnsembleModel:
    task: Task
    scheme: LabelScheme
    members: list[EnsembleMember]

    @property
    def classes(self) -> tuple[str, ...]:
        return self.scheme.classes


def train_member(
    texts: Sequence[str],
    labels: Sequence[str],
    scheme: LabelScheme,
    spec: MemberSpec,
    params: TrainParams,
    calibration: str = "platt",
    jobs: int = 1,
    doc_ids: Optional[Sequence[str]] = None,
) -> EnsembleMember:
    """Fit one member end to end: vocabulary, idf, weights, calibration."""
    tokens = [tokenize(t) for t in texts]
    vocab = build_vocabulary(
        tokens,
        ngram_range=spec.ngram_range,
        min_df=spec.min_df,
        fit_ids=doc_ids,
    )
    idf = fit_idf(tokens, vocab) if spec.weighting == "tfidf" else None
    X = vectorize_corpus(tokens, vocab, weighting=spec.weighting, idf=idf)
    member_params = TrainParams(
        C=params.C,
        loss=params.loss,
        tol=params.tol,
        max_iter=params.max_iter,
        seed=derive_seed(params.seed, "member", spec.name),
    )
    model = train_calibrated_ovr(X, labels, scheme, member_params, calibration=calibration, jobs=jobs)
    return EnsembleMember(spec=spec, vocabulary=vocab, idf=idf, model=model)


def train_ensemble(
    texts: Sequence[str],
    labels: Sequence[str],
    task: Task,
    scheme: LabelScheme,
    params: TrainParams,
    member_specs: Sequence[MemberSpec] = DEFAULT_MEMBER_SPECS,
    calibration: str = "platt",
    jobs: int = 1,
    doc_ids: Optional[Sequence[str]] = None,
) -> EnsembleModel:
    if not member_specs:
        raise InputError("ensemble needs at least one member spec")
    names = [s.name for s in member_specs]
    if len(set(names)) != len(names):
        raise InputError(f"member names must be unique, got {names}")
    members = [
        train_member(texts, labels, scheme, spec, params, calibration=calibration, jobs=jobs, doc_ids=doc_ids)
        for spec in member_specs
    ]
    return EnsembleModel(task=task, scheme=scheme, members=members)


def member_probabilities(member: EnsembleMember, texts: Sequence[str]) -> np.ndarray:
    """(n_texts, n_classes) probability matrix from one member."""
    tokens = [tokenize(t) for t in texts]
    X = vectorize_corpus(tokens, member.vocabulary, weighting=member.spec.weighting, idf=member.idf)
    return predict_proba_matrix(member.model, X)


def mean_probability(member_probs: Sequence[np.ndarray]) -> np.ndarray:
    """Entry-wise arithmetic mean of the members' probability matrices."""
    if len(member_probs) == 0:
        raise InputError("cannot average zero probability matrices")
    first = np.asarray(member_probs[0], dtype=np.float64)
    stacked = np.empty((len(member_probs),) + first.shape, dtype=np.float64)
    stacked[0] = first
    for i, p in enumerate(member_probs[1:], start=1):
        p = np.asarray(p, dtype=np.float64)
        if p.shape != first.shape:
            raise InputError(f"probability shape mismatch: {p.shape} vs {first.shape}")
        stacked[i] = p
    return stacked.mean(axis=0)


def predict_proba_ensemble(model: EnsembleModel, texts: Sequence[str]) -> np.ndarray:
    return mean_probability([member_probabilities(m, texts) for m in model.members])


def predict(model: EnsembleModel, texts: Sequence[str]) -> tuple[list[str], np.ndarray]:
    """Predicted class per text plus the averaged probability matrix.

    Argmax ties resolve to the lowest class index, which is well defined
    because class order is fixed by the scheme.
    """
    probs = predict_proba_ensemble(model, texts)
    picks = probs.argmax(axis=1)
    return [model.classes[i] for i in picks], probs


# ---------------------------------------------------------------------------
# persistence: a directory with one manifest plus per-member files


def _member_filenames(name: str) -> tuple[str, str]:
    return f"member-{name}.vocab.tsv", f"member-{name}.model.json"


def save_ensemble(model: EnsembleModel, directory: str | Path) -> Path:
    """Write vocab + model files per member, then the hashing manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for member in model.members:
        vocab_name, model_name = _member_filenames(member.spec.name)
        member.vocabulary.save(directory / vocab_name)
        payload = {
            "spec": member.spec.to_dict(),
            "idf": None
            if member.idf is None
            else {"idf": member.idf.idf.tolist(), "doc_count": member.idf.doc_count},
            "model": model_to_dict(member.model),
        }
        write_json(directory / model_name, payload)
        entries.append(
            {
                "name": member.spec.name,
                "spec": member.spec.to_dict(),
                "vocab_file": vocab_name,
                "model_file": model_name,
                "vocab_sha256": sha256_file(directory / vocab_name),
                "model_sha256": sha256_file(directory / model_name),
            }
        )
    manifest = {
        "version": MANIFEST_VERSION,
        "task": model.task.value,
        "scheme": model.scheme.to_dict(),
        "members": entries,
    }
    path = directory / MANIFEST_NAME
    write_json(path, manifest)
    return path


def load_ensemble(directory: str | Path) -> EnsembleModel:
    """Load a saved ensemble, verifying every file hash in the manifest."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise InputError(f"no ensemble manifest at {manifest_path}")
    manifest = read_json(manifest_path)
    if manifest.get("version") != MANIFEST_VERSION:
        raise InputError(f"unsupported ensemble manifest version {manifest.get('version')!r}")
    task = Task(manifest["task"])
    scheme = LabelScheme.from_dict(manifest["scheme"])
    members = []
    for entry in manifest["members"]:
        vocab_path = directory / entry["vocab_file"]
        model_path = directory / entry["model_file"]
        for path, expected in ((vocab_path, entry["vocab_sha256"]), (model_path, entry["model_sha256"])):
            if not path.is_file():
                raise IntegrityError(f"ensemble file missing: {path}")
            actual = sha256_file(path)
            if actual != expected:
                raise IntegrityError(f"hash mismatch for {path}: expected {expected}, got {actual}")
        payload = read_json(model_path)
        spec = MemberSpec.from_dict(payload["spec"])
        vocab = Vocabulary.load(vocab_path, ngram_range=spec.ngram_range, min_df=spec.min_df)
        idf_payload = payload["idf"]
        idf = (
            None
            if idf_payload is None
            else IdfWeights(idf=np.asarray(idf_payload["idf"], dtype=np.float64), doc_count=idf_payload["doc_count"])
        )
        members.append(EnsembleMember(spec=spec, vocabulary=vocab, idf=idf, model=model_from_dict(payload["model"])))
    return EnsembleModel(task=task, scheme=scheme, members=members)
