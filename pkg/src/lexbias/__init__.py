"""lexbias: quantify how much a contextual lexical semantic dataset can be
solved from context alone or the target word alone."""
from .ingest import (
    DatasetManifest,
    ParseError,
    PredictionRecord,
    parse_canonical,
    parse_predictions,
    parse_wic_tsv,
    write_canonical,
)
from .metrics import (
    accuracy,
    aggregate_runs,
    agreement,
    bias_score,
    build_bias_report,
    human_convention_baseline,
    label_entropy,
    min_gap,
    sense_entropy,
)
from .perturb import (
    MaskConfig,
    PerturbedInstance,
    analytic_label_baseline,
    make_context_variant,
    make_label_variant,
    make_word_variant,
    mark_targets,
    substitute_target,
)
from .types import (
    BiasReport,
    DegenerateDenominatorError,
    EntropyReport,
    Instance,
    Label,
    LexbiasError,
    PredictionSet,
    ScoreSummary,
    Segment,
    TOOLKIT_VERSION,
    TaskKind,
    ValidationError,
    VariantKind,
)

__version__ = TOOLKIT_VERSION

__all__ = [
    "BiasReport",
    "DatasetManifest",
    "DegenerateDenominatorError",
    "EntropyReport",
    "Instance",
    "Label",
    "LexbiasError",
    "MaskConfig",
    "ParseError",
    "PerturbedInstance",
    "PredictionRecord",
    "PredictionSet",
    "ScoreSummary",
    "Segment",
    "TaskKind",
    "ValidationError",
    "VariantKind",
    "accuracy",
    "aggregate_runs",
    "agreement",
    "analytic_label_baseline",
    "bias_score",
    "build_bias_report",
    "human_convention_baseline",
    "label_entropy",
    "make_context_variant",
    "make_label_variant",
    "make_word_variant",
    "mark_targets",
    "min_gap",
    "parse_canonical",
    "parse_predictions",
    "parse_wic_tsv",
    "sense_entropy",
    "substitute_target",
    "write_canonical",
]
