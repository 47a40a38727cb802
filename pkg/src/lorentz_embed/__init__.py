"""Hierarchy embeddings in the Lorentz model of hyperbolic space."""

__version__ = "0.1.0"

from .data import (AnnotationTable, InteractionLog, TaxonomyDag, aggregate_interactions,
                   closure_dataset, cognate_similarity, load_edges, transitive_closure)
from .errors import BoundaryError, CycleError, DataError, LorentzEmbedError, NumericError
from .evaluation import EvalReport, evaluate
from .objective import SimilarityDataset
from .optimizer import EmbeddingTable, OptimizerConfig, init_embeddings
from .training import train

__all__ = [
    "AnnotationTable", "BoundaryError", "CycleError", "DataError", "EmbeddingTable",
    "EvalReport", "InteractionLog", "LorentzEmbedError", "NumericError", "OptimizerConfig",
    "SimilarityDataset", "TaxonomyDag", "aggregate_interactions", "closure_dataset",
    "cognate_similarity", "evaluate", "init_embeddings", "load_edges", "train",
    "transitive_closure",
]
