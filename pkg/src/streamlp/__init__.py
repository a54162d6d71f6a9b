"""Streaming label propagation over dynamically expanded KNN graphs."""

from . import backend
from .engine import EngineConfig, OracleMismatch, RunReport, SessionData, run_stream
from .graph import BoundedRowGraph, EdgeWeightConfig, NodeBlock, NormalizedGraph, knn_edges, rebuild_static, static_rows
from .io import IngestError, LabelSidecar, read_embeddings, read_sidecar, write_embeddings, write_sidecar
from .model import ContextStats, Embedding, HyperParams, InvalidLabel, LabelState, NodeKind, StatsDegenerate
from .oracle import OracleSingular, closed_form_lp, dense_pipeline, exhaustive_knn
from .propagate import attenuate, init_labels, predict, propagate_step, reset_labels, run_propagation
from .reweight import (
    compute_fewshot_stats,
    compute_prototype_stats,
    fewshot_reweighted_similarity,
    text_reweighted_similarity,
)
from .synthetic import GeneratorError, generate_synthetic, make_synthetic

__version__ = "0.1.0"
