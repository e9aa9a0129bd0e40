"""Court ruling classification: masked n-gram features, linear SVMs, mean ensembles."""

from .config import ExperimentConfig, config_from_dict, load_config
from .corpus import (
    CaseDocument,
    CorpusStats,
    LabelScheme,
    Task,
    TIME_BUCKETS,
    assign_time_bucket,
    build_label_scheme,
    ingest_corpus,
    load_corpus,
    normalize_law_area,
    normalize_ruling_label,
    parse_document,
    save_corpus,
    task_label,
)
from .ensemble import (
    DEFAULT_MEMBER_SPECS,
    EnsembleMember,
    EnsembleModel,
    MemberSpec,
    load_ensemble,
    mean_probability,
    predict,
    predict_proba_ensemble,
    save_ensemble,
    train_ensemble,
)
from .errors import (
    ConfigurationError,
    CorpusError,
    DegenerateTaskError,
    InputError,
    IntegrityError,
    JurisvmError,
    LeakageError,
    StateError,
)
from .evaluation import (
    CVResult,
    ClassMetrics,
    MetricsSummary,
    compute_metrics,
    confusion_matrix,
    run_cv,
    stratified_folds,
    write_report,
)
from .features import (
    IdfWeights,
    SparseVector,
    Vocabulary,
    build_vocabulary,
    fit_idf,
    iter_ngrams,
    tokenize,
    vectorize,
    vectorize_corpus,
)
from .masking import (
    MaskLexicon,
    MaskReport,
    mask_digits,
    mask_label_words,
    mask_ruling,
    mask_text_for_task,
    task_forbidden_forms,
    verify_masked,
    verify_no_digits,
)
from .plots import confusion_heatmap, f1_bars, render_report_figures
from .svm import (
    BinarySolution,
    CalibratedModel,
    LinearModel,
    TrainParams,
    calibrate,
    decision_values,
    fit_platt_sigmoid,
    predict_proba,
    train_binary,
    train_calibrated_ovr,
    train_ovr,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BinarySolution",
    "CVResult",
    "CalibratedModel",
    "CaseDocument",
    "ClassMetrics",
    "ConfigurationError",
    "CorpusError",
    "CorpusStats",
    "DEFAULT_MEMBER_SPECS",
    "DegenerateTaskError",
    "EnsembleMember",
    "EnsembleModel",
    "ExperimentConfig",
    "IdfWeights",
    "InputError",
    "IntegrityError",
    "JurisvmError",
    "LabelScheme",
    "LeakageError",
    "LinearModel",
    "MaskLexicon",
    "MaskReport",
    "MemberSpec",
    "MetricsSummary",
    "SparseVector",
    "StateError",
    "TIME_BUCKETS",
    "Task",
    "TrainParams",
    "Vocabulary",
    "assign_time_bucket",
    "build_label_scheme",
    "build_vocabulary",
    "calibrate",
    "compute_metrics",
    "config_from_dict",
    "confusion_heatmap",
    "confusion_matrix",
    "decision_values",
    "f1_bars",
    "fit_idf",
    "fit_platt_sigmoid",
    "ingest_corpus",
    "iter_ngrams",
    "load_config",
    "load_corpus",
    "load_ensemble",
    "mask_digits",
    "mask_label_words",
    "mask_ruling",
    "mask_text_for_task",
    "mean_probability",
    "normalize_law_area",
    "normalize_ruling_label",
    "parse_document",
    "predict",
    "predict_proba",
    "predict_proba_ensemble",
    "render_report_figures",
    "run_cv",
    "save_corpus",
    "save_ensemble",
    "stratified_folds",
    "task_forbidden_forms",
    "task_label",
    "tokenize",
    "train_binary",
    "train_calibrated_ovr",
    "train_ensemble",
    "train_ovr",
    "vectorize",
    "vectorize_corpus",
    "verify_masked",
    "verify_no_digits",
    "write_report",
]
