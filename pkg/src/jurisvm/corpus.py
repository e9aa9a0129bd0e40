"""Corpus ingestion and label normalization for French court rulings.

Raw documents are XML files (one ruling per file) living in a directory or
a zip/tar archive. Element names are not hardcoded: a schema map says which
elements hold the description, the law area, the ruling string and the
date. Ingestion deduplicates on whitespace-normalized description text,
drops documents without a usable description, and derives the three task
label schemes (law area, ruling, time bucket).
"""

from __future__ import annotations

import re
import tarfile
import unicodedata
import xml.etree.ElementTree as ET
import zipfile
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import CorpusError, DegenerateTaskError
from .fileio import read_jsonl, write_json, write_jsonl


class Task(str, Enum):
    LAW_AREA = "law_area"
    RULING_FIRST_WORD = "ruling_first_word"
    RULING_FULL = "ruling_full"
    TIME_BUCKET = "time_bucket"


#: Fixed time-bucket classes, lexicographic order (the catch-all bucket for
#: the earliest cases sorts last).
TIME_BUCKETS = (
    "1960-1969",
    "1970-1979",
    "1980-1989",
    "1990-1999",
    "2000-2009",
    "2010-2016",
    "until-1959",
)

YEAR_MIN, YEAR_MAX = 1700, 2016

DEFAULT_SCHEMA_MAP = {
    "description": "description",
    "law_area": "law_area",
    "ruling": "ruling",
    "date": "date",
    "id": "id",
}

DEFAULT_MIN_COUNT = 200

_YEAR_RE = re.compile(r"\b(\d{4})\b")


@dataclass(frozen=True)
class CaseDocument:
    """One court ruling: text plus whatever raw labels were present."""

    id: str
    description: str
    law_area_raw: Optional[str] = None
    ruling_raw: Optional[str] = None
    year: Optional[int] = None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "law_area": self.law_area_raw,
            "ruling": self.ruling_raw,
            "year": self.year,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CaseDocument":
        return cls(
            id=rec["id"],
            description=rec["description"],
            law_area_raw=rec.get("law_area"),
            ruling_raw=rec.get("ruling"),
            year=rec.get("year"),
        )


@dataclass(frozen=True)
class LabelScheme:
    """Retained classes of one task, in fixed lexicographic order."""

    task: Task
    classes: tuple[str, ...]
    min_count: int = DEFAULT_MIN_COUNT

    def __post_init__(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise CorpusError("label scheme classes must be distinct")

    def index_of(self, cls_name: str) -> int:
        return self.classes.index(cls_name)

    def to_dict(self) -> dict:
        return {"task": self.task.value, "classes": list(self.classes), "min_count": self.min_count}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelScheme":
        return cls(task=Task(d["task"]), classes=tuple(d["classes"]), min_count=d["min_count"])


@dataclass
class CorpusStats:
    total_ingested: int = 0
    duplicates_removed: int = 0
    incomplete_removed: int = 0
    retained: int = 0
    per_class_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total_ingested": self.total_ingested,
            "duplicates_removed": self.duplicates_removed,
            "incomplete_removed": self.incomplete_removed,
            "retained": self.retained,
            "per_class_counts": self.per_class_counts,
        }


# ---------------------------------------------------------------------------
# text normalization shared by label handling and masking


def strip_accents(text: str) -> str:
    """Drop combining marks: "Irrecevabilité" -> "Irrecevabilite"."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def normalize_label_text(text: str) -> str:
    """Lowercase, accent-strip and whitespace-collapse a raw label string."""
    return normalize_whitespace(strip_accents(text).lower())


# ---------------------------------------------------------------------------
# parsing


class IncompleteDocumentError(CorpusError):
    """Document lacks a non-empty description."""


def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.split("\n")
    prefix = "\n".join(lines[: line - 1])
    head = (prefix + "\n") if line > 1 else ""
    return len(head.encode("utf-8")) + len(lines[line - 1][:column].encode("utf-8"))


def parse_document(
    xml_text: str,
    schema_map: Mapping[str, str] | None = None,
    fallback_id: str | None = None,
) -> CaseDocument:
    """Parse one XML ruling into a CaseDocument.

    Fields whose mapped element is absent stay None; they are never
    defaulted. Raises CorpusError with the byte offset on malformed XML and
    IncompleteDocumentError when the description is missing or empty.
    """
    schema = dict(DEFAULT_SCHEMA_MAP)
    if schema_map:
        schema.update(schema_map)
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        offset = _byte_offset(xml_text, line, col)
        raise CorpusError(f"malformed XML at byte offset {offset} (line {line}, column {col}): {exc.msg}") from exc

    def element_text(key: str) -> Optional[str]:
        tag = schema.get(key)
        if not tag:
            return None
        node = root.find(f".//{tag}") if root.tag != tag else root
        if node is None:
            return None
        text = "".join(node.itertext()).strip()
        return text if text else None

    description = element_text("description")
    if description is None:
        raise IncompleteDocumentError("document has no non-empty description element")

    doc_id = element_text("id") or root.get("id") or fallback_id
    if not doc_id:
        raise CorpusError("document has no id element/attribute and no fallback id was given")

    date_text = element_text("date")
    year: Optional[int] = None
    if date_text:
        m = _YEAR_RE.search(date_text)
        if m:
            year = int(m.group(1))

    return CaseDocument(
        id=doc_id,
        description=description,
        law_area_raw=element_text("law_area"),
        ruling_raw=element_text("ruling"),
        year=year,
    )


def _iter_xml_sources(source: str | Path) -> Iterator[tuple[str, str]]:
    """Yield (relative name, xml text) pairs in deterministic sorted order."""
    source = Path(source)
    if source.is_dir():
        for path in sorted(source.rglob("*.xml")):
            yield str(path.relative_to(source)), path.read_text(encoding="utf-8")
    elif zipfile.is_zipfile(source):
        with zipfile.ZipFile(source) as zf:
            for name in sorted(zf.namelist()):
                if name.endswith(".xml"):
                    yield name, zf.read(name).decode("utf-8")
    elif tarfile.is_tarfile(source):
        with tarfile.open(source) as tf:
            members = sorted((m for m in tf.getmembers() if m.isfile() and m.name.endswith(".xml")), key=lambda m: m.name)
            for m in members:
                fh = tf.extractfile(m)
                assert fh is not None
                yield m.name, fh.read().decode("utf-8")
    else:
        raise CorpusError(f"unreadable corpus source: {source} (expected directory, zip or tar archive)")


def ingest_corpus(
    source: str | Path,
    schema_map: Mapping[str, str] | None = None,
) -> tuple[list[CaseDocument], CorpusStats]:
    """Read, deduplicate and filter a raw corpus.

    Duplicate = identical description after whitespace normalization; the
    first occurrence (sorted file order) wins. Documents without a usable
    description are dropped and counted. Malformed XML aborts the ingest.
    """
    source = Path(source)
    if not source.exists():
        raise CorpusError(f"corpus source does not exist: {source}")

    stats = CorpusStats()
    seen_descriptions: set[str] = set()
    seen_ids: set[str] = set()
    docs: list[CaseDocument] = []

    for name, xml_text in _iter_xml_sources(source):
        stats.total_ingested += 1
        fallback = re.sub(r"\.xml$", "", name).replace("\\", "/")
        try:
            doc = parse_document(xml_text, schema_map, fallback_id=fallback)
        except IncompleteDocumentError:
            stats.incomplete_removed += 1
            continue
        except CorpusError as exc:
            raise CorpusError(f"{name}: {exc}") from exc
        key = normalize_whitespace(doc.description)
        if key in seen_descriptions:
            stats.duplicates_removed += 1
            continue
        if doc.id in seen_ids:
            raise CorpusError(f"duplicate document id: {doc.id!r}")
        seen_descriptions.add(key)
        seen_ids.add(doc.id)
        docs.append(doc)

    stats.retained = len(docs)
    if stats.retained == 0:
        raise CorpusError(f"no documents retained from {source}")
    stats.per_class_counts = {task.value: dict(count_task_labels(docs, task)) for task in Task}
    return docs, stats


# ---------------------------------------------------------------------------
# label normalization


def normalize_law_area(raw: str) -> str:
    """Canonical law-area class name: accent-stripped uppercase with underscores.

    "Chambre sociale" and "CHAMBRE_SOCIALE" unify to "CHAMBRE_SOCIALE".
    """
    text = strip_accents(raw).upper()
    text = re.sub(r"[^A-Z0-9]+", "_", text).strip("_")
    return text


def normalize_ruling_label(
    ruling_raw: str,
    first_word: bool,
    classes: Sequence[str] | None = None,
) -> Optional[str]:
    """Normalize a raw ruling string into a class name.

    first_word=True keeps only the first whitespace-delimited token of the
    normalized string; otherwise the whole normalized string is the class.
    When `classes` is given, labels outside it yield None (the document is
    excluded from the task rather than mislabeled).
    """
    text = normalize_label_text(ruling_raw)
    if not text:
        return None
    label = text.split()[0] if first_word else text
    if classes is not None and label not in classes:
        return None
    return label


def assign_time_bucket(year: int) -> str:
    """Map a ruling year onto the fixed seven-bucket scheme."""
    if not (YEAR_MIN <= year <= 2100):
        raise CorpusError(f"year {year} outside plausible range [{YEAR_MIN}, 2100]")
    if year > YEAR_MAX:
        raise CorpusError(f"year {year} is outside the corpus span (max {YEAR_MAX})")
    if year <= 1959:
        return "until-1959"
    if year >= 2010:
        return "2010-2016"
    decade = (year // 10) * 10
    return f"{decade}-{decade + 9}"


def task_label(
    doc: CaseDocument,
    task: Task,
    classes: Sequence[str] | None = None,
) -> Optional[str]:
    """The document's class for `task`, or None when it is excluded."""
    if task is Task.LAW_AREA:
        if doc.law_area_raw is None:
            return None
        label = normalize_law_area(doc.law_area_raw)
        if not label or (classes is not None and label not in classes):
            return None
        return label
    if task in (Task.RULING_FIRST_WORD, Task.RULING_FULL):
        if doc.ruling_raw is None:
            return None
        return normalize_ruling_label(doc.ruling_raw, task is Task.RULING_FIRST_WORD, classes)
    if task is Task.TIME_BUCKET:
        if doc.year is None or not (YEAR_MIN <= doc.year <= YEAR_MAX):
            return None
        label = assign_time_bucket(doc.year)
        if classes is not None and label not in classes:
            return None
        return label
    raise ValueError(f"unknown task: {task}")


def count_task_labels(docs: Iterable[CaseDocument], task: Task) -> Counter:
    counts: Counter = Counter()
    for doc in docs:
        label = task_label(doc, task)
        if label is not None:
            counts[label] += 1
    return counts


def build_label_scheme(
    docs: Sequence[CaseDocument],
    task: Task,
    min_count: int = DEFAULT_MIN_COUNT,
) -> LabelScheme:
    """Retained classes for a task: strictly more than `min_count` instances.

    The time-bucket task ignores the threshold and always uses the fixed
    seven buckets.
    """
    if not docs:
        raise CorpusError("cannot build a label scheme from an empty corpus")
    if task is Task.TIME_BUCKET:
        return LabelScheme(task=task, classes=TIME_BUCKETS, min_count=min_count)
    counts = count_task_labels(docs, task)
    classes = tuple(sorted(c for c, n in counts.items() if n > min_count))
    if len(classes) < 2:
        raise DegenerateTaskError(
            f"task {task.value}: only {len(classes)} class(es) exceed min_count={min_count}"
        )
    return LabelScheme(task=task, classes=classes, min_count=min_count)


# ---------------------------------------------------------------------------
# persistence


def save_corpus(docs: Iterable[CaseDocument], path: str | Path) -> None:
    write_jsonl(path, (doc.to_record() for doc in docs))


def load_corpus(path: str | Path) -> list[CaseDocument]:
    return [CaseDocument.from_record(rec) for rec in read_jsonl(path)]


def save_stats(stats: CorpusStats, path: str | Path) -> None:
    write_json(path, stats.to_dict())
