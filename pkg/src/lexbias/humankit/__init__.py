"""Human-evaluation protocol: overlap sampling, judgment journal, annotation service."""
from .sampling import AnnotationBatch, SplitMix64, sample_batches
from .store import BatchStore, ConflictError, Judgment, export_judgments

__all__ = [
    "AnnotationBatch",
    "BatchStore",
    "ConflictError",
    "Judgment",
    "SplitMix64",
    "export_judgments",
    "sample_batches",
]
