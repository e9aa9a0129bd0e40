"""Target-leakage masking of case descriptions.

Training a ruling predictor on descriptions that literally contain the
ruling would be pointless, so every token that gives the target away is
scrubbed before featurization: label words for the law-area task, label
words plus nominal/verbal surface forms for the ruling tasks, and all
digits for the time-bucket task. Matching is on accent-stripped lowercase
whole tokens; deleted tokens leave a single collapsed space behind.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import LabelScheme, Task, normalize_whitespace, strip_accents
from .errors import ConfigurationError

# Maximal runs of letters/digits; underscore is a separator, apostrophes
# and hyphens split ("l'arrêt" -> l, arrêt; "non-lieu" -> non, lieu).
TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_DIGIT_RE = re.compile(r"\d", re.UNICODE)


def normalize_token(token: str) -> str:
    return strip_accents(token).lower()


def label_words(label: str) -> frozenset[str]:
    """Normalized word tokens of a class name ("CHAMBRE_SOCIALE" -> {chambre, sociale})."""
    return frozenset(normalize_token(t) for t in TOKEN_RE.findall(label))


@dataclass
class MaskReport:
    tokens_removed: int = 0
    documents_touched: int = 0
    residual_hits: int = 0

    def to_dict(self) -> dict:
        return {
            "tokens_removed": self.tokens_removed,
            "documents_touched": self.documents_touched,
            "residual_hits": self.residual_hits,
        }


@dataclass(frozen=True)
class MaskLexicon:
    """Per-class surface forms (nominal + verbal) to scrub for the ruling tasks.

    Forms are stored accent-stripped and lowercased; multi-word forms are
    broken into their word tokens so matching stays symmetric with the
    whole-token scanner. Each class's own label words are always included.
    """

    entries: Mapping[str, frozenset[str]]

    @staticmethod
    def _normalize_entries(raw: Mapping[str, Iterable[str]]) -> dict[str, frozenset[str]]:
        entries: dict[str, frozenset[str]] = {}
        for cls_name, forms in raw.items():
            tokens: set[str] = set(label_words(cls_name))
            for form in forms:
                tokens.update(normalize_token(t) for t in TOKEN_RE.findall(form))
            entries[cls_name] = frozenset(tokens)
        return entries

    @classmethod
    def from_entries(cls, raw: Mapping[str, Iterable[str]]) -> "MaskLexicon":
        return cls(entries=cls._normalize_entries(raw))

    @classmethod
    def from_file(cls, path: str | Path) -> "MaskLexicon":
        raw: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if "\t" not in line:
                    raise ConfigurationError(f"{path}:{lineno}: expected 'class<TAB>form1,form2,...'")
                cls_name, forms = line.split("\t", 1)
                raw[cls_name.strip()] = [f.strip() for f in forms.split(",") if f.strip()]
        return cls.from_entries(raw)

    @classmethod
    def default(cls) -> "MaskLexicon":
        """The shipped ruling lexicon (versioned data file, user-editable)."""
        ref = resources.files("jurisvm.data").joinpath("ruling_lexicon.tsv")
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def to_file(self, path: str | Path) -> None:
        lines = [
            f"{cls_name}\t{','.join(sorted(forms))}"
            for cls_name, forms in sorted(self.entries.items())
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def validate_for(self, scheme: LabelScheme) -> None:
        missing = [c for c in scheme.classes if c not in self.entries]
        if missing:
            raise ConfigurationError(f"mask lexicon has no entry for class(es): {', '.join(missing)}")

    def all_forms(self) -> frozenset[str]:
        out: set[str] = set()
        for forms in self.entries.values():
            out.update(forms)
        return frozenset(out)


# ---------------------------------------------------------------------------
# core token scrubbing


def _remove_tokens(text: str, forbidden: frozenset[str]) -> tuple[str, int]:
    removed = 0

    def repl(match: re.Match) -> str:
        nonlocal removed
        if normalize_token(match.group(0)) in forbidden:
            removed += 1
            return ""
        return match.group(0)

    return normalize_whitespace(TOKEN_RE.sub(repl, text)), removed


def mask_label_words(text: str, label: str) -> str:
    """Remove every token matching a word of `label` (case/accent-insensitive)."""
    masked, _ = _remove_tokens(text, label_words(label))
    return masked


def mask_ruling(text: str, label: str, lexicon: MaskLexicon) -> str:
    """Scrub all ruling-revealing tokens from a description.

    Removes the surface forms of every class in the lexicon, not only the
    document's own label: surviving mentions of other rulings would still
    leak class-discriminating signal.
    """
    if label not in lexicon.entries:
        raise ConfigurationError(f"mask lexicon has no entry for label {label!r}")
    forbidden = lexicon.all_forms() | label_words(label)
    masked, _ = _remove_tokens(text, forbidden)
    return masked


def mask_digits(text: str) -> str:
    """Remove every Unicode decimal digit and collapse whitespace."""
    return normalize_whitespace(_DIGIT_RE.sub("", text))


def verify_masked(texts: Iterable[str], forbidden: Iterable[str]) -> MaskReport:
    """Scan already-masked texts for any forbidden form as a whole token.

    Nonzero residual_hits means the masking pass failed; this is reported,
    not raised.
    """
    forbidden_set = frozenset(normalize_token(f) for form in forbidden for f in TOKEN_RE.findall(form))
    report = MaskReport()
    for text in texts:
        hits = sum(1 for tok in TOKEN_RE.findall(text) if normalize_token(tok) in forbidden_set)
        if hits:
            report.documents_touched += 1
            report.residual_hits += hits
    return report


def verify_no_digits(texts: Iterable[str]) -> MaskReport:
    report = MaskReport()
    for text in texts:
        hits = len(_DIGIT_RE.findall(text))
        if hits:
            report.documents_touched += 1
            report.residual_hits += hits
    return report


# ---------------------------------------------------------------------------
# task-level masking


def task_forbidden_forms(task: Task, scheme: LabelScheme, lexicon: MaskLexicon | None) -> frozenset[str]:
    """Union of forms that must not survive masking for `task`.

    Law area masks label words of ALL scheme classes (a mention of any
    chamber is a giveaway); the ruling tasks add the lexicon's nominal and
    verbal forms. The time-bucket task masks digits instead and has no
    forbidden token set.
    """
    if task is Task.TIME_BUCKET:
        return frozenset()
    forms: set[str] = set()
    for cls_name in scheme.classes:
        forms.update(label_words(cls_name))
    if task in (Task.RULING_FIRST_WORD, Task.RULING_FULL):
        if lexicon is None:
            raise ConfigurationError("ruling masking requires a mask lexicon")
        lexicon.validate_for(scheme)
        forms.update(lexicon.all_forms())
    return frozenset(forms)


def mask_text_for_task(
    text: str,
    task: Task,
    forbidden: frozenset[str],
) -> tuple[str, int]:
    """Mask one description; returns (masked text, tokens removed)."""
    if task is Task.TIME_BUCKET:
        stripped = _DIGIT_RE.sub("", text)
        return normalize_whitespace(stripped), len(text) - len(stripped)
    return _remove_tokens(text, forbidden)
