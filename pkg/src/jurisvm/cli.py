"""Command-line interface for the ruling-classification pipeline.

Subcommands: ingest, mask, evaluate, train, predict, audit-features.
Exit codes: 0 success, 2 bad usage or configuration, 3 data integrity or
verification failure, 1 unexpected internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

from .config import ExperimentConfig, load_config
from .corpus import (
    CaseDocument,
    Task,
    build_label_scheme,
    ingest_corpus,
    load_corpus,
    save_corpus,
    save_stats,
    task_label,
)
from .ensemble import load_ensemble, predict, save_ensemble, train_ensemble
from .errors import (
    ConfigurationError,
    CorpusError,
    InputError,
    IntegrityError,
    LeakageError,
)
from .evaluation import run_cv, write_report
from .fileio import atomic_write_text, read_jsonl, write_json, write_jsonl
from .masking import (
    MaskLexicon,
    MaskReport,
    mask_text_for_task,
    task_forbidden_forms,
    verify_masked,
    verify_no_digits,
)
from .plots import render_report_figures

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_DATA = 3

LEXICON_FILENAME = "lexicon.tsv"

_TASK_CHOICES = [t.value for t in Task]


def _load_lexicon(path: Optional[str], model_dir: Optional[Path] = None) -> MaskLexicon:
    if path:
        return MaskLexicon.from_file(path)
    if model_dir is not None and (model_dir / LEXICON_FILENAME).is_file():
        return MaskLexicon.from_file(model_dir / LEXICON_FILENAME)
    return MaskLexicon.default()


def _mask_corpus(
    docs: Sequence[CaseDocument],
    task: Task,
    scheme,
    lexicon: MaskLexicon,
) -> tuple[list[str], list[str], list[str], MaskReport]:
    """Label, mask and verify every usable document.

    Returns (ids, masked_texts, labels, verification_report); documents
    whose label falls outside the scheme are excluded.
    """
    forbidden = task_forbidden_forms(task, scheme, lexicon)
    ids: list[str] = []
    texts: list[str] = []
    labels: list[str] = []
    removed_total = 0
    touched = 0
    for doc in docs:
        label = task_label(doc, task, scheme.classes)
        if label is None:
            continue
        masked, n_removed = mask_text_for_task(doc.description, task, forbidden)
        ids.append(doc.id)
        texts.append(masked)
        labels.append(label)
        removed_total += n_removed
        if n_removed:
            touched += 1
    if task is Task.TIME_BUCKET:
        report = verify_no_digits(texts)
    else:
        report = verify_masked(texts, forbidden)
    report.tokens_removed = removed_total
    report.documents_touched = touched
    return ids, texts, labels, report


def _report_masking(report: MaskReport, n_docs: int) -> bool:
    """Print the verification outcome; True when the masking is clean."""
    print(
        f"masked {n_docs} documents: {report.tokens_removed} removals "
        f"across {report.documents_touched} documents"
    )
    if report.residual_hits > 0:
        print(f"VERIFICATION FAILED: {report.residual_hits} residual label-word hits", file=sys.stderr)
        return False
    print("verification: no residual label material")
    return True


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    docs, stats = ingest_corpus(args.input, schema_map=cfg.schema_map)
    save_corpus(docs, args.out_corpus)
    save_stats(stats, args.out_stats)
    print(
        f"ingested {stats.total_ingested} documents: retained {stats.retained}, "
        f"removed {stats.duplicates_removed} duplicates and {stats.incomplete_removed} incomplete"
    )
    print(f"wrote {args.out_corpus} and {args.out_stats}")
    return EXIT_OK


def cmd_mask(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    task = Task(args.task) if args.task else cfg.task
    docs = load_corpus(args.corpus)
    scheme = build_label_scheme(docs, task, min_count=cfg.min_count)
    lexicon = _load_lexicon(args.lexicon or cfg.lexicon_path)
    ids, texts, labels, report = _mask_corpus(docs, task, scheme, lexicon)
    write_jsonl(args.out, ({"id": i, "text": t, "label": l} for i, t, l in zip(ids, texts, labels)))
    if args.report:
        write_json(args.report, {"task": task.value, "documents": len(ids), **report.to_dict()})
    print(f"wrote {len(ids)} masked documents to {args.out}")
    if not _report_masking(report, len(ids)):
        return EXIT_DATA
    return EXIT_OK


def _prepare_task_data(args: argparse.Namespace, cfg: ExperimentConfig):
    """Shared evaluate/train front half: load, label, mask, verify."""
    task = Task(args.task) if args.task else cfg.task
    docs = load_corpus(args.corpus)
    scheme = build_label_scheme(docs, task, min_count=cfg.min_count)
    lexicon = _load_lexicon(args.lexicon or cfg.lexicon_path)
    ids, texts, labels, report = _mask_corpus(docs, task, scheme, lexicon)
    if not ids:
        raise CorpusError(f"no documents usable for task {task.value}")
    return task, scheme, lexicon, ids, texts, labels, report


def cmd_evaluate(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    task, scheme, _, ids, texts, labels, report = _prepare_task_data(args, cfg)
    if not _report_masking(report, len(ids)):
        return EXIT_DATA
    folds = args.folds or cfg.folds
    result = run_cv(
        texts,
        labels,
        ids,
        task,
        scheme,
        cfg.train,
        k=folds,
        member_specs=cfg.members,
        calibration=cfg.calibration,
        jobs=cfg.jobs,
    )
    out_dir = Path(args.out_dir)
    paths = write_report(result, out_dir)
    figures = render_report_figures(result, out_dir, fmt=cfg.figure_format)
    p = result.pooled
    print(f"task {task.value}: {len(ids)} documents, {len(scheme.classes)} classes, {folds} folds")
    print(f"accuracy {p.accuracy:.4f}  macro-F1 {p.macro_f1:.4f}  weighted-F1 {p.weighted_f1:.4f}")
    for kind in ("json", "text", "csv"):
        print(f"wrote {paths[kind]}")
    for name in sorted(figures):
        print(f"wrote {figures[name]}")
    if result.non_converged:
        print(f"warning: {len(result.non_converged)} solve(s) hit max_iter", file=sys.stderr)
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    task, scheme, lexicon, ids, texts, labels, report = _prepare_task_data(args, cfg)
    if not _report_masking(report, len(ids)):
        return EXIT_DATA
    model = train_ensemble(
        texts,
        labels,
        task,
        scheme,
        cfg.train,
        member_specs=cfg.members,
        calibration=cfg.calibration,
        jobs=cfg.jobs,
        doc_ids=ids,
    )
    out_dir = Path(args.out_dir)
    manifest_path = save_ensemble(model, out_dir)
    lexicon.to_file(out_dir / LEXICON_FILENAME)
    print(f"trained {len(model.members)} member(s) on {len(ids)} documents, {len(scheme.classes)} classes")
    for member in model.members:
        print(f"  {member.spec.name}: {member.vocabulary.size} features")
    print(f"wrote {manifest_path}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    model_dir = Path(args.model_dir)
    model = load_ensemble(model_dir)
    lexicon = _load_lexicon(args.lexicon or cfg.lexicon_path, model_dir=model_dir)
    forbidden = task_forbidden_forms(model.task, model.scheme, lexicon)
    ids: list[str] = []
    texts: list[str] = []
    for i, rec in enumerate(read_jsonl(args.input)):
        raw = rec.get("description", rec.get("text"))
        if raw is None:
            raise InputError(f"{args.input}: record {i} has neither 'description' nor 'text'")
        masked, _ = mask_text_for_task(raw, model.task, forbidden)
        ids.append(str(rec.get("id", f"row-{i}")))
        texts.append(masked)
    if not ids:
        raise InputError(f"no input records in {args.input}")
    picked, probs = predict(model, texts)
    write_jsonl(
        args.out,
        (
            {
                "id": doc_id,
                "label": label,
                "probabilities": {c: float(p) for c, p in zip(model.classes, row)},
            }
            for doc_id, label, row in zip(ids, picked, probs)
        ),
    )
    print(f"predicted {len(ids)} documents -> {args.out}")
    return EXIT_OK


def cmd_audit_features(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    model = load_ensemble(args.model_dir)
    wanted_members = set(args.member) if args.member else None
    wanted_classes = set(args.label) if args.label else None
    lines: list[str] = ["member\tclass\trank\tterm\tweight"]
    for member in model.members:
        if wanted_members is not None and member.spec.name not in wanted_members:
            continue
        index_to_term = {i: t for t, i in member.vocabulary.terms.items()}
        for ci, cls_name in enumerate(model.classes):
            if wanted_classes is not None and cls_name not in wanted_classes:
                continue
            weights = member.model.base.weights[ci]
            order = weights.argsort()[::-1][: args.top]
            for rank, fi in enumerate(order, start=1):
                lines.append(
                    f"{member.spec.name}\t{cls_name}\t{rank}\t{index_to_term[int(fi)]}\t{float(weights[fi])!r}"
                )
    body = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, body)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(body)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and dispatch


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="experiment config JSON")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="parallel one-vs-rest solves")
    common.add_argument(
        "-v", "--verbose", action="count", default=argparse.SUPPRESS, help="increase log verbosity"
    )

    parser = argparse.ArgumentParser(
        prog="jurisvm",
        parents=[common],
        description="court ruling classification: ingest, mask, train, evaluate",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", parents=[common], help="parse raw XML into a JSONL corpus")
    p.add_argument("--input", required=True, help="directory, zip, or tar of XML documents")
    p.add_argument("--out-corpus", required=True, help="output corpus JSONL path")
    p.add_argument("--out-stats", required=True, help="output ingestion stats JSON path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mask", parents=[common], help="remove label material from descriptions")
    p.add_argument("--corpus", required=True, help="corpus JSONL from ingest")
    p.add_argument("--task", choices=_TASK_CHOICES, help="classification task")
    p.add_argument("--lexicon", help="ruling lexicon TSV (default: packaged)")
    p.add_argument("--out", required=True, help="output masked JSONL path")
    p.add_argument("--report", help="optional masking report JSON path")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("evaluate", parents=[common], help="stratified k-fold cross-validation")
    p.add_argument("--corpus", required=True, help="corpus JSONL from ingest")
    p.add_argument("--task", choices=_TASK_CHOICES, help="classification task")
    p.add_argument("--lexicon", help="ruling lexicon TSV (default: packaged)")
    p.add_argument("--folds", type=int, help="fold count (default: config)")
    p.add_argument("--out-dir", required=True, help="directory for reports and figures")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", parents=[common], help="train an ensemble on the full corpus")
    p.add_argument("--corpus", required=True, help="corpus JSONL from ingest")
    p.add_argument("--task", choices=_TASK_CHOICES, help="classification task")
    p.add_argument("--lexicon", help="ruling lexicon TSV (default: packaged)")
    p.add_argument("--out-dir", required=True, help="directory for the saved ensemble")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify new documents with a saved ensemble")
    p.add_argument("--model-dir", required=True, help="directory written by train")
    p.add_argument("--input", required=True, help="JSONL with 'description' or 'text' per record")
    p.add_argument("--lexicon", help="ruling lexicon TSV (default: one saved with the model)")
    p.add_argument("--out", required=True, help="output predictions JSONL path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("audit-features", parents=[common], help="top-weighted terms per class")
    p.add_argument("--model-dir", required=True, help="directory written by train")
    p.add_argument("--member", action="append", help="restrict to this member (repeatable)")
    p.add_argument("--label", action="append", help="restrict to this class (repeatable)")
    p.add_argument("--top", type=int, default=20, help="terms per class (default 20)")
    p.add_argument("--out", help="write TSV here instead of stdout")
    p.set_defaults(func=cmd_audit_features)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbosity = getattr(args, "verbose", 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbosity > 1 else logging.INFO if verbosity == 1 else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config_path = getattr(args, "config", None)
        cfg = load_config(config_path) if config_path else ExperimentConfig()
        cfg = cfg.with_overrides(seed=getattr(args, "seed", None), jobs=getattr(args, "jobs", None))
        return args.func(args, cfg)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, LeakageError, IntegrityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
