"""Mean-probability ensemble and persistence tests."""

import numpy as np
import pytest

from jurisvm.corpus import LabelScheme, Task
from jurisvm.ensemble import (
    DEFAULT_MEMBER_SPECS,
    EnsembleMember,
    EnsembleModel,
    MemberSpec,
    load_ensemble,
    mean_probability,
    member_probabilities,
    predict,
    predict_proba_ensemble,
    save_ensemble,
    train_ensemble,
)
from jurisvm.errors import InputError, IntegrityError
from jurisvm.features import Vocabulary
from jurisvm.svm import CalibratedModel, LinearModel, TrainParams
from jurisvm.synthetic import make_separable_texts

SCHEME = LabelScheme(
    task=Task.RULING_FIRST_WORD,
    classes=("annulation", "cassation", "irrecevabilite", "non-lieu", "rejet"),
    min_count=0,
)


@pytest.fixture(scope="module")
def small_corpus():
    texts, labels = make_separable_texts(n_docs=150, seed=42)
    ids = [f"t{i}" for i in range(len(texts))]
    return texts, labels, ids


@pytest.fixture(scope="module")
def trained(small_corpus):
    texts, labels, ids = small_corpus
    return train_ensemble(
        texts, labels, Task.RULING_FIRST_WORD, SCHEME, TrainParams(seed=2), doc_ids=ids
    )


class TestMeanProbability:
    def test_single_member_is_identity(self):
        p = np.array([[0.2, 0.8], [0.6, 0.4]])
        assert np.array_equal(mean_probability([p]), p)

    def test_known_mean(self):
        a = np.array([[0.2, 0.8]])
        b = np.array([[0.6, 0.4]])
        assert np.allclose(mean_probability([a, b]), [[0.4, 0.6]], atol=1e-15)

    def test_empty_raises(self):
        with pytest.raises(InputError):
            mean_probability([])

    def test_shape_mismatch_raises(self):
        with pytest.raises(InputError):
            mean_probability([np.zeros((1, 2)), np.zeros((2, 2))])


class TestDefaultLineup:
    def test_three_members(self):
        names = [s.name for s in DEFAULT_MEMBER_SPECS]
        assert names == ["unigram-counts", "bigram-counts", "bigram-tfidf"]
        assert DEFAULT_MEMBER_SPECS[0].ngram_range == (1, 1)
        assert DEFAULT_MEMBER_SPECS[1].ngram_range == (1, 2)
        assert DEFAULT_MEMBER_SPECS[2].weighting == "tfidf"

    def test_member_spec_round_trip(self):
        spec = MemberSpec(name="x", ngram_range=(1, 2), weighting="tfidf", min_df=3)
        assert MemberSpec.from_dict(spec.to_dict()) == spec


class TestTrainEnsemble:
    def test_member_count_and_classes(self, trained):
        assert len(trained.members) == 3
        assert trained.classes == SCHEME.classes

    def test_predicts_training_data(self, trained, small_corpus):
        texts, labels, _ = small_corpus
        picked, probs = predict(trained, texts)
        assert picked == labels
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_member_probability_rows_sum_to_one(self, trained, small_corpus):
        texts, _, _ = small_corpus
        for member in trained.members:
            probs = member_probabilities(member, texts[:10])
            assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_ensemble_probs_are_member_means(self, trained, small_corpus):
        texts, _, _ = small_corpus
        per_member = [member_probabilities(m, texts[:5]) for m in trained.members]
        assert np.allclose(
            predict_proba_ensemble(trained, texts[:5]), np.mean(per_member, axis=0), atol=1e-12
        )

    def test_duplicate_member_names_raise(self, small_corpus):
        texts, labels, ids = small_corpus
        specs = [MemberSpec(name="dup"), MemberSpec(name="dup", ngram_range=(1, 2))]
        with pytest.raises(InputError):
            train_ensemble(
                texts, labels, Task.RULING_FIRST_WORD, SCHEME, TrainParams(), member_specs=specs, doc_ids=ids
            )

    def test_no_members_raises(self, small_corpus):
        texts, labels, ids = small_corpus
        with pytest.raises(InputError):
            train_ensemble(
                texts, labels, Task.RULING_FIRST_WORD, SCHEME, TrainParams(), member_specs=[], doc_ids=ids
            )


class TestTieBreaking:
    def test_uniform_probabilities_pick_lowest_class_index(self):
        vocab = Vocabulary(terms={"mot": 0}, ngram_range=(1, 1), min_df=1)
        base = LinearModel(classes=SCHEME.classes, weights=np.zeros((5, 1)), bias=np.zeros(5))
        member = EnsembleMember(
            spec=MemberSpec(name="flat"), vocabulary=vocab, idf=None, model=CalibratedModel(base=base)
        )
        model = EnsembleModel(task=Task.RULING_FIRST_WORD, scheme=SCHEME, members=[member])
        picked, probs = predict(model, ["mot mot"])
        assert np.allclose(probs[0], 0.2, atol=1e-12)
        assert picked == ["annulation"]  # lowest class index on a tie


class TestPersistence:
    def test_save_load_round_trip(self, trained, small_corpus, tmp_path):
        texts, _, _ = small_corpus
        save_ensemble(trained, tmp_path)
        loaded = load_ensemble(tmp_path)
        assert loaded.task == trained.task
        assert loaded.scheme == trained.scheme
        before = predict_proba_ensemble(trained, texts[:20])
        after = predict_proba_ensemble(loaded, texts[:20])
        assert np.array_equal(before, after)

    def test_tampered_file_raises(self, trained, tmp_path):
        save_ensemble(trained, tmp_path)
        victim = next(tmp_path.glob("member-*.model.json"))
        victim.write_text(victim.read_text(encoding="utf-8") + " ", encoding="utf-8")
        with pytest.raises(IntegrityError, match="hash mismatch"):
            load_ensemble(tmp_path)

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(InputError):
            load_ensemble(tmp_path)

    def test_missing_member_file_raises(self, trained, tmp_path):
        save_ensemble(trained, tmp_path)
        next(tmp_path.glob("member-*.vocab.tsv")).unlink()
        with pytest.raises(IntegrityError, match="missing"):
            load_ensemble(tmp_path)
