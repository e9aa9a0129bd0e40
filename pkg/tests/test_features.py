"""Tokenizer, vocabulary, and vectorizer tests."""

import math

import numpy as np
import pytest

from jurisvm.errors import ConfigurationError, InputError
from jurisvm.features import (
    IdfWeights,
    SparseVector,
    Vocabulary,
    build_vocabulary,
    fit_idf,
    iter_ngrams,
    to_csr_row,
    tokenize,
    vectorize,
    vectorize_corpus,
)


class TestTokenize:
    def test_lowercases_and_splits_elisions(self):
        assert tokenize("L'arrêt REJETTE tout") == ["l", "arrêt", "rejette", "tout"]

    def test_accents_are_preserved(self):
        assert tokenize("délibéré") == ["délibéré"]

    def test_digits_are_tokens(self):
        assert tokenize("article 455 du code") == ["article", "455", "du", "code"]

    def test_underscore_is_a_separator(self):
        assert tokenize("CHAMBRE_SOCIALE") == ["chambre", "sociale"]


class TestNgrams:
    def test_unigrams_and_bigrams(self):
        assert list(iter_ngrams(["a", "b", "c"], (1, 2))) == ["a", "b", "c", "a b", "b c"]

    def test_unigrams_only(self):
        assert list(iter_ngrams(["a", "b"], (1, 1))) == ["a", "b"]

    def test_short_documents(self):
        assert list(iter_ngrams(["a"], (1, 2))) == ["a"]
        assert list(iter_ngrams([], (1, 2))) == []


class TestVocabulary:
    corpus = [
        ["le", "juge", "statue"],
        ["le", "juge", "condamne"],
        ["un", "texte", "divers"],
    ]

    def test_min_df_filters_and_order_is_lexicographic(self):
        vocab = build_vocabulary(self.corpus, ngram_range=(1, 1), min_df=2)
        assert list(vocab.terms) == ["juge", "le"]
        assert vocab.terms == {"juge": 0, "le": 1}

    def test_bigrams_included(self):
        vocab = build_vocabulary(self.corpus, ngram_range=(1, 2), min_df=2)
        assert "le juge" in vocab.terms

    def test_indices_are_dense_and_sorted(self):
        vocab = build_vocabulary(self.corpus, ngram_range=(1, 2), min_df=1)
        terms = sorted(vocab.terms, key=vocab.terms.__getitem__)
        assert terms == sorted(terms)
        assert sorted(vocab.terms.values()) == list(range(vocab.size))

    def test_empty_vocabulary_raises(self):
        with pytest.raises(ConfigurationError):
            build_vocabulary([["seul"]], min_df=2)

    def test_bad_ngram_range_raises(self):
        with pytest.raises(ConfigurationError):
            build_vocabulary(self.corpus, ngram_range=(2, 1))
        with pytest.raises(ConfigurationError):
            build_vocabulary(self.corpus, ngram_range=(1, 3))

    def test_fit_ids_recorded(self):
        vocab = build_vocabulary(self.corpus, min_df=1, fit_ids=["a", "b", "c"])
        assert vocab.fit_ids == frozenset({"a", "b", "c"})

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocabulary(self.corpus, ngram_range=(1, 2), min_df=1)
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        loaded = Vocabulary.load(path, ngram_range=(1, 2), min_df=1)
        assert loaded.terms == vocab.terms


class TestIdf:
    def test_frozen_reference_values(self):
        # one term in 1 of 10 documents, another in all 10
        corpus = [["rare", "commun"]] + [["commun"]] * 9
        vocab = build_vocabulary(corpus, ngram_range=(1, 1), min_df=1)
        idf = fit_idf(corpus, vocab)
        assert idf.doc_count == 10
        expected_rare = math.log(11.0 / 2.0) + 1.0  # 2.7047480922384253
        assert idf.idf[vocab.terms["rare"]] == pytest.approx(expected_rare, abs=1e-15)
        assert idf.idf[vocab.terms["commun"]] == pytest.approx(1.0, abs=1e-15)

    def test_idf_positive(self):
        corpus = [["a", "b"], ["a"]]
        vocab = build_vocabulary(corpus, ngram_range=(1, 1), min_df=1)
        idf = fit_idf(corpus, vocab)
        assert np.all(idf.idf > 0)


class TestVectorize:
    corpus = [["un", "deux", "deux"], ["un", "trois"], ["deux", "trois"]]

    def vocab(self):
        return build_vocabulary(self.corpus, ngram_range=(1, 1), min_df=1)

    def test_counts(self):
        vocab = self.vocab()
        vec = vectorize(["deux", "deux", "un", "inconnu"], vocab, weighting="counts")
        as_dict = dict(vec.pairs)
        assert as_dict == {vocab.terms["deux"]: 2.0, vocab.terms["un"]: 1.0}

    def test_indices_strictly_increasing(self):
        vec = vectorize(["trois", "un", "deux"], self.vocab(), weighting="counts")
        idxs = [i for i, _ in vec.pairs]
        assert idxs == sorted(idxs)

    def test_tfidf_is_unit_norm(self):
        vocab = self.vocab()
        idf = fit_idf(self.corpus, vocab)
        vec = vectorize(["un", "deux", "trois"], vocab, weighting="tfidf", idf=idf)
        assert vec.l2_norm() == pytest.approx(1.0, abs=1e-12)

    def test_tfidf_without_idf_raises(self):
        with pytest.raises(InputError):
            vectorize(["un"], self.vocab(), weighting="tfidf")

    def test_all_oov_yields_empty_vector(self):
        vec = vectorize(["rien", "connu"], self.vocab(), weighting="counts")
        assert vec.pairs == ()
        assert vec.l2_norm() == 0.0

    def test_sparse_vector_validates_indices(self):
        with pytest.raises(InputError):
            SparseVector(dims=4, pairs=((2, 1.0), (1, 1.0)))
        with pytest.raises(InputError):
            SparseVector(dims=2, pairs=((5, 1.0),))


class TestVectorizeCorpus:
    def test_matches_single_document_path(self):
        corpus = [["a", "b", "a"], ["b", "c"], ["a", "c", "c"]]
        vocab = build_vocabulary(corpus, ngram_range=(1, 2), min_df=1)
        idf = fit_idf(corpus, vocab)
        X = vectorize_corpus(corpus, vocab, weighting="tfidf", idf=idf)
        assert X.shape == (3, vocab.size)
        for row, tokens in enumerate(corpus):
            single = to_csr_row(vectorize(tokens, vocab, weighting="tfidf", idf=idf))
            assert np.allclose(X[row].toarray(), single.toarray(), atol=0, rtol=0)

    def test_dtype_and_shape(self):
        corpus = [["x", "y"], ["y", "z"]]
        vocab = build_vocabulary(corpus, ngram_range=(1, 1), min_df=1)
        X = vectorize_corpus(corpus, vocab, weighting="counts")
        assert X.dtype == np.float64
        assert X.shape == (2, vocab.size)


def test_idf_weights_round_trip_via_arrays():
    w = IdfWeights(idf=np.array([1.5, 2.5]), doc_count=4)
    again = IdfWeights(idf=np.asarray(w.idf.tolist()), doc_count=w.doc_count)
    assert np.array_equal(w.idf, again.idf) and again.doc_count == 4
