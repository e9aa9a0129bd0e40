"""Sparse n-gram featurization: tokenizer, vocabulary, counts and TF-IDF.

The vocabulary is always fit on training-fold documents only; it records
the ids it was fit from so the evaluation harness can assert the
no-leakage contract. Term indices are dense and lexicographic, hence
deterministic for a given corpus and settings.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, InputError
from .fileio import atomic_write_text
from .masking import TOKEN_RE

WEIGHTINGS = ("counts", "tfidf")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; apostrophes split French elisions apart."""
    return TOKEN_RE.findall(text.lower())


def iter_ngrams(tokens: Sequence[str], ngram_range: tuple[int, int]) -> Iterable[str]:
    lo, hi = ngram_range
    for n in range(lo, hi + 1):
        if n == 1:
            yield from tokens
        else:
            for i in range(len(tokens) - n + 1):
                yield " ".join(tokens[i : i + n])


@dataclass(frozen=True)
class Vocabulary:
    """n-gram to column index map over a fixed training corpus."""

    terms: dict[str, int]
    ngram_range: tuple[int, int] = (1, 2)
    min_df: int = 2
    fit_ids: Optional[frozenset[str]] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return len(self.terms)

    def save(self, path: str | Path) -> None:
        ordered = sorted(self.terms.items(), key=lambda kv: kv[1])
        atomic_write_text(path, "".join(f"{t}\t{i}\n" for t, i in ordered))

    @classmethod
    def load(cls, path: str | Path, ngram_range: tuple[int, int] = (1, 2), min_df: int = 2) -> "Vocabulary":
        terms: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                term, idx = line.rsplit("\t", 1)
                terms[term] = int(idx)
        return cls(terms=terms, ngram_range=ngram_range, min_df=min_df)


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs over `dims` columns; zeros are not stored."""

    dims: int
    pairs: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        prev = -1
        for idx, weight in self.pairs:
            if idx <= prev or idx >= self.dims:
                raise InputError("sparse vector indices must be strictly increasing and < dims")
            prev = idx

    def l2_norm(self) -> float:
        return math.sqrt(sum(w * w for _, w in self.pairs))


@dataclass(frozen=True)
class IdfWeights:
    idf: np.ndarray
    doc_count: int


def build_vocabulary(
    corpus_tokens: Sequence[Sequence[str]],
    ngram_range: tuple[int, int] = (1, 2),
    min_df: int = 2,
    fit_ids: Optional[Iterable[str]] = None,
) -> Vocabulary:
    """Vocabulary of all n-grams in range with document frequency >= min_df.

    Call on training folds only; pass the training document ids as
    `fit_ids` so downstream leakage checks can see what the fit saw.
    """
    if not corpus_tokens:
        raise ConfigurationError("cannot build a vocabulary from an empty corpus")
    if not (1 <= ngram_range[0] <= ngram_range[1] <= 2):
        raise ConfigurationError(f"ngram_range must be within (1, 2), got {ngram_range}")
    df: Counter = Counter()
    for tokens in corpus_tokens:
        df.update(set(iter_ngrams(tokens, ngram_range)))
    kept = sorted(t for t, n in df.items() if n >= min_df)
    if not kept:
        raise ConfigurationError(f"empty vocabulary: no n-gram reaches min_df={min_df}")
    terms = {t: i for i, t in enumerate(kept)}
    ids = frozenset(fit_ids) if fit_ids is not None else None
    return Vocabulary(terms=terms, ngram_range=ngram_range, min_df=min_df, fit_ids=ids)


def fit_idf(corpus_tokens: Sequence[Sequence[str]], vocab: Vocabulary) -> IdfWeights:
    """Smooth inverse document frequency: ln((1+N)/(1+df)) + 1, always > 0."""
    if not corpus_tokens:
        raise ConfigurationError("cannot fit idf on an empty corpus")
    n_docs = len(corpus_tokens)
    df = np.zeros(vocab.size, dtype=np.float64)
    for tokens in corpus_tokens:
        seen = {vocab.terms[g] for g in iter_ngrams(tokens, vocab.ngram_range) if g in vocab.terms}
        for idx in seen:
            df[idx] += 1.0
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return IdfWeights(idf=idf, doc_count=n_docs)


def _term_counts(tokens: Sequence[str], vocab: Vocabulary) -> list[tuple[int, float]]:
    counts: Counter = Counter()
    for gram in iter_ngrams(tokens, vocab.ngram_range):
        idx = vocab.terms.get(gram)
        if idx is not None:
            counts[idx] += 1
    return sorted((i, float(c)) for i, c in counts.items())


def vectorize(
    tokens: Sequence[str],
    vocab: Vocabulary,
    weighting: str = "counts",
    idf: Optional[IdfWeights] = None,
) -> SparseVector:
    """One document to a sparse vector; out-of-vocabulary n-grams are dropped.

    TF-IDF vectors are L2-normalized (unit norm unless empty).
    """
    if weighting not in WEIGHTINGS:
        raise InputError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    pairs = _term_counts(tokens, vocab)
    if weighting == "tfidf":
        if idf is None:
            raise InputError("tfidf weighting requires fitted idf weights")
        pairs = [(i, tf * idf.idf[i]) for i, tf in pairs]
        norm = math.sqrt(sum(w * w for _, w in pairs))
        if norm > 0:
            pairs = [(i, w / norm) for i, w in pairs]
    return SparseVector(dims=vocab.size, pairs=tuple(pairs))


def vectorize_corpus(
    corpus_tokens: Sequence[Sequence[str]],
    vocab: Vocabulary,
    weighting: str = "counts",
    idf: Optional[IdfWeights] = None,
) -> sparse.csr_matrix:
    """Batch variant of `vectorize` producing a CSR matrix (rows = documents)."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for tokens in corpus_tokens:
        vec = vectorize(tokens, vocab, weighting, idf)
        for i, w in vec.pairs:
            indices.append(i)
            data.append(w)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(corpus_tokens), vocab.size),
    )


def to_csr_row(vec: SparseVector) -> sparse.csr_matrix:
    indices = np.asarray([i for i, _ in vec.pairs], dtype=np.int32)
    data = np.asarray([w for _, w in vec.pairs], dtype=np.float64)
    indptr = np.asarray([0, len(data)], dtype=np.int64)
    return sparse.csr_matrix((data, indices, indptr), shape=(1, vec.dims))
