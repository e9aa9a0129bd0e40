"""Deterministic synthetic corpora for tests, benchmarks, and demos.

Five balanced ruling classes, each with its own pool of pseudo-word signal
tokens plus a shared filler pool, give a linearly separable problem that a
well-implemented pipeline should solve almost perfectly. Generated words
are consonant-vowel syllable strings screened against every ruling lexicon
form and label word, so the only label leakage is what the generator
injects on purpose (the ruling phrase and the optional leak prefix), all
of which masking is expected to remove.
"""

from __future__ import annotations

import argparse
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CaseDocument
from .masking import MaskLexicon, label_words
from .seeding import derive_seed

DEFAULT_CLASSES = ("annulation", "cassation", "irrecevabilite", "non-lieu", "rejet")

DEFAULT_LAW_AREAS = (
    "Chambre sociale",
    "Chambre criminelle",
    "Chambre commerciale",
    "Premiere chambre civile",
    "Deuxieme chambre civile",
)

_BUCKET_YEAR_RANGES = {
    "until-1959": (1930, 1959),
    "1960-1969": (1960, 1969),
    "1970-1979": (1970, 1979),
    "1980-1989": (1980, 1989),
    "1990-1999": (1990, 1999),
    "2000-2009": (2000, 2009),
    "2010-2016": (2010, 2016),
}

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _forbidden_words(classes: Sequence[str]) -> frozenset[str]:
    forbidden = set(MaskLexicon.default().all_forms())
    for cls_name in classes:
        forbidden |= label_words(cls_name)
    for area in DEFAULT_LAW_AREAS:
        forbidden |= label_words(area)
    return frozenset(forbidden)


def _pseudo_words(rng: np.random.Generator, count: int, forbidden: frozenset[str]) -> list[str]:
    """Unique CV-syllable words (2 to 4 syllables) avoiding `forbidden`."""
    words: list[str] = []
    seen: set[str] = set(forbidden)
    while len(words) < count:
        n_syll = int(rng.integers(2, 5))
        word = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))] + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(n_syll)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def make_separable_texts(
    n_docs: int = 2000,
    classes: Sequence[str] = DEFAULT_CLASSES,
    seed: int = 0,
    vocab_per_class: int = 40,
    shared_vocab: int = 150,
    doc_tokens: tuple[int, int] = (30, 60),
    signal_fraction: float = 0.7,
) -> tuple[list[str], list[str]]:
    """Balanced texts whose class is recoverable from disjoint token pools."""
    rng = np.random.default_rng(derive_seed(seed, "synthetic-texts"))
    forbidden = _forbidden_words(classes)
    all_words = _pseudo_words(rng, vocab_per_class * len(classes) + shared_vocab, forbidden)
    pools = [
        np.asarray(all_words[ci * vocab_per_class : (ci + 1) * vocab_per_class])
        for ci in range(len(classes))
    ]
    shared = np.asarray(all_words[vocab_per_class * len(classes) :])
    texts: list[str] = []
    labels: list[str] = []
    lo, hi = doc_tokens
    for i in range(n_docs):
        ci = i % len(classes)
        n = int(rng.integers(lo, hi + 1))
        signal_mask = rng.random(n) < signal_fraction
        n_signal = int(signal_mask.sum())
        tokens = np.empty(n, dtype=object)
        tokens[signal_mask] = rng.choice(pools[ci], size=n_signal)
        tokens[~signal_mask] = rng.choice(shared, size=n - n_signal)
        texts.append(" ".join(tokens))
        labels.append(classes[ci])
    return texts, labels


def make_documents(
    n_docs: int = 2000,
    classes: Sequence[str] = DEFAULT_CLASSES,
    seed: int = 0,
    leak_label_words: bool = True,
    **text_kwargs,
) -> list[CaseDocument]:
    """Full synthetic CaseDocuments with ruling, law area, and date labels.

    With leak_label_words=True, each description opens with forms from its
    class's ruling lexicon entry, giving the masking stage real work.
    """
    texts, labels = make_separable_texts(n_docs=n_docs, classes=classes, seed=seed, **text_kwargs)
    rng = np.random.default_rng(derive_seed(seed, "synthetic-docs"))
    lexicon = MaskLexicon.default()
    buckets = list(_BUCKET_YEAR_RANGES)
    docs: list[CaseDocument] = []
    for i, (text, label) in enumerate(zip(texts, labels)):
        if leak_label_words and label in lexicon.entries:
            forms = sorted(lexicon.entries[label])
            picked = [forms[int(rng.integers(len(forms)))] for _ in range(2)]
            text = " ".join(picked) + " " + text
        ruling = label.upper() if i % 2 == 0 else f"{label.upper()} : decision rendue"
        lo, hi = _BUCKET_YEAR_RANGES[buckets[i % len(buckets)]]
        year = int(rng.integers(lo, hi + 1))
        docs.append(
            CaseDocument(
                id=f"synth-{i:05d}",
                description=text,
                law_area_raw=DEFAULT_LAW_AREAS[i % len(DEFAULT_LAW_AREAS)],
                ruling_raw=ruling,
                year=year,
            )
        )
    return docs


def write_xml_corpus(docs: Sequence[CaseDocument], directory: str | Path) -> list[Path]:
    """One XML file per document, matching the default schema map."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    for doc in docs:
        root = ET.Element("case")
        ET.SubElement(root, "id").text = doc.id
        ET.SubElement(root, "description").text = doc.description
        if doc.law_area_raw is not None:
            ET.SubElement(root, "law_area").text = doc.law_area_raw
        if doc.ruling_raw is not None:
            ET.SubElement(root, "ruling").text = doc.ruling_raw
        if doc.year is not None:
            ET.SubElement(root, "date").text = f"{doc.year}-06-15"
        path = directory / f"{doc.id}.xml"
        path.write_bytes(ET.tostring(root, encoding="utf-8", xml_declaration=True))
        paths.append(path)
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="generate a synthetic XML ruling corpus")
    parser.add_argument("--out", required=True, help="output directory for XML files")
    parser.add_argument("--docs", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--no-leak", action="store_true", help="skip the label-word leak prefix")
    args = parser.parse_args(argv)
    docs = make_documents(n_docs=args.docs, seed=args.seed, leak_label_words=not args.no_leak)
    paths = write_xml_corpus(docs, args.out)
    print(f"wrote {len(paths)} XML documents to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
