"""Experiment configuration: one JSON file driving the whole pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .corpus import DEFAULT_MIN_COUNT, DEFAULT_SCHEMA_MAP, Task
from .ensemble import DEFAULT_MEMBER_SPECS, MemberSpec
from .errors import ConfigurationError
from .features import WEIGHTINGS
from .fileio import read_json
from .svm import LOSSES, TrainParams

FIGURE_FORMATS = ("svg", "png", "pdf")

_TOP_KEYS = {
    "task",
    "min_count",
    "folds",
    "seed",
    "jobs",
    "train",
    "members",
    "calibration",
    "figure_format",
    "schema_map",
    "lexicon_path",
}
_TRAIN_KEYS = {"C", "loss", "tol", "max_iter", "seed"}
_MEMBER_KEYS = {"name", "ngram_range", "weighting", "min_df"}


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task = Task.RULING_FIRST_WORD
    min_count: int = DEFAULT_MIN_COUNT
    folds: int = 10
    seed: int = 0
    jobs: int = 1
    train: TrainParams = TrainParams()
    members: tuple[MemberSpec, ...] = DEFAULT_MEMBER_SPECS
    calibration: str = "platt"
    figure_format: str = "svg"
    schema_map: dict = field(default_factory=lambda: dict(DEFAULT_SCHEMA_MAP))
    lexicon_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.min_count < 0:
            raise ConfigurationError(f"min_count must be >= 0, got {self.min_count}")
        if self.folds < 2:
            raise ConfigurationError(f"folds must be >= 2, got {self.folds}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")
        if self.calibration not in ("platt", "softmax"):
            raise ConfigurationError(f"calibration must be 'platt' or 'softmax', got {self.calibration!r}")
        if self.figure_format not in FIGURE_FORMATS:
            raise ConfigurationError(f"figure_format must be one of {FIGURE_FORMATS}, got {self.figure_format!r}")
        if not self.members:
            raise ConfigurationError("members must list at least one featurization")
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"member names must be unique, got {names}")

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "min_count": self.min_count,
            "folds": self.folds,
            "seed": self.seed,
            "jobs": self.jobs,
            "train": self.train.to_dict(),
            "members": [m.to_dict() for m in self.members],
            "calibration": self.calibration,
            "figure_format": self.figure_format,
            "schema_map": dict(self.schema_map),
            "lexicon_path": self.lexicon_path,
        }

    def with_overrides(self, seed: Optional[int] = None, jobs: Optional[int] = None) -> "ExperimentConfig":
        """Apply command-line --seed/--jobs on top of the file values."""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed, train=replace(cfg.train, seed=seed))
        if jobs is not None:
            cfg = replace(cfg, jobs=jobs)
        return cfg


def _parse_member(d: dict, position: int) -> MemberSpec:
    if not isinstance(d, dict):
        raise ConfigurationError(f"members[{position}] must be an object, got {type(d).__name__}")
    unknown = set(d) - _MEMBER_KEYS
    if unknown:
        raise ConfigurationError(f"members[{position}] has unknown keys: {sorted(unknown)}")
    if "name" not in d:
        raise ConfigurationError(f"members[{position}] needs a name")
    ngram = d.get("ngram_range", [1, 1])
    if not (isinstance(ngram, (list, tuple)) and len(ngram) == 2):
        raise ConfigurationError(f"members[{position}].ngram_range must be a two-element list")
    weighting = d.get("weighting", "counts")
    if weighting not in WEIGHTINGS:
        raise ConfigurationError(f"members[{position}].weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    return MemberSpec(
        name=d["name"],
        ngram_range=(int(ngram[0]), int(ngram[1])),
        weighting=weighting,
        min_df=int(d.get("min_df", 2)),
    )


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a validated config from a plain dict (e.g. a parsed JSON file)."""
    if not isinstance(d, dict):
        raise ConfigurationError(f"config root must be an object, got {type(d).__name__}")
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    if "task" in d:
        try:
            kwargs["task"] = Task(d["task"])
        except ValueError:
            raise ConfigurationError(
                f"unknown task {d['task']!r}; valid tasks: {[t.value for t in Task]}"
            ) from None
    if "train" in d:
        t = d["train"]
        if not isinstance(t, dict):
            raise ConfigurationError("train must be an object")
        unknown = set(t) - _TRAIN_KEYS
        if unknown:
            raise ConfigurationError(f"unknown train keys: {sorted(unknown)}")
        base = {"C": 1.0, "loss": "hinge_l2", "tol": 1e-4, "max_iter": 1000}
        base.update(t)
        if base["loss"] not in LOSSES:
            raise ConfigurationError(f"train.loss must be one of {LOSSES}, got {base['loss']!r}")
        seed_val = base.pop("seed", d.get("seed", 0))
        try:
            kwargs["train"] = TrainParams(seed=int(seed_val), **base)
        except Exception as exc:
            raise ConfigurationError(f"bad train settings: {exc}") from None
    elif "seed" in d:
        kwargs["train"] = TrainParams(seed=int(d["seed"]))
    if "members" in d:
        if not isinstance(d["members"], list):
            raise ConfigurationError("members must be a list")
        kwargs["members"] = tuple(_parse_member(m, i) for i, m in enumerate(d["members"]))
    if "schema_map" in d:
        if not isinstance(d["schema_map"], dict):
            raise ConfigurationError("schema_map must be an object")
        merged = dict(DEFAULT_SCHEMA_MAP)
        unknown = set(d["schema_map"]) - set(merged)
        if unknown:
            raise ConfigurationError(f"unknown schema_map keys: {sorted(unknown)}")
        merged.update({k: str(v) for k, v in d["schema_map"].items()})
        kwargs["schema_map"] = merged
    for key in ("min_count", "folds", "seed", "jobs"):
        if key in d:
            kwargs[key] = int(d[key])
    for key in ("calibration", "figure_format"):
        if key in d:
            kwargs[key] = d[key]
    if "lexicon_path" in d and d["lexicon_path"] is not None:
        kwargs["lexicon_path"] = str(d["lexicon_path"])
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = read_json(path)
    except ValueError as exc:
        raise ConfigurationError(f"config at {path} is not valid JSON: {exc}") from None
    return config_from_dict(raw)
