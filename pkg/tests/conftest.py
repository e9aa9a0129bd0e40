"""Shared fixtures: the expensive synthetic cross-validation run happens once."""

from __future__ import annotations

import time

import pytest

from jurisvm.corpus import LabelScheme, Task
from jurisvm.evaluation import run_cv
from jurisvm.svm import TrainParams
from jurisvm.synthetic import DEFAULT_CLASSES, make_separable_texts

FIXTURE_SEED = 20160901


@pytest.fixture(scope="session")
def separable_fixture():
    """The 2,000-document 5-class separable corpus (already label-free text)."""
    texts, labels = make_separable_texts(n_docs=2000, seed=FIXTURE_SEED)
    ids = [f"doc-{i:04d}" for i in range(len(texts))]
    scheme = LabelScheme(task=Task.RULING_FIRST_WORD, classes=DEFAULT_CLASSES, min_count=0)
    return texts, labels, ids, scheme


@pytest.fixture(scope="session")
def cv_outcome(separable_fixture):
    """(CVResult, wall seconds) for the standard 10-fold, 3-member run."""
    texts, labels, ids, scheme = separable_fixture
    start = time.perf_counter()
    result = run_cv(
        texts,
        labels,
        ids,
        Task.RULING_FIRST_WORD,
        scheme,
        TrainParams(seed=FIXTURE_SEED),
        k=10,
    )
    elapsed = time.perf_counter() - start
    return result, elapsed
