"""Time-aware knowledge-graph embeddings with per-bin hyperplanes,
temporal smoothness and task-oriented negative sampling."""

from .dataset import (
    Fact,
    TemporalGraph,
    TimeBinning,
    compute_binning,
    materialize,
    parse_facts,
)
from .model import HyperParams, ModelState, init, load_checkpoint, save_checkpoint
from .sampler import ConstraintPair, NegativeSampler
from .trainer import TrainReport, fit, objective
from .evaluate import RankReport, SyntheticSpec, evaluate, generate_synthetic, rank_query

__all__ = [
    "Fact",
    "TemporalGraph",
    "TimeBinning",
    "compute_binning",
    "materialize",
    "parse_facts",
    "HyperParams",
    "ModelState",
    "init",
    "load_checkpoint",
    "save_checkpoint",
    "ConstraintPair",
    "NegativeSampler",
    "TrainReport",
    "fit",
    "objective",
    "RankReport",
    "SyntheticSpec",
    "evaluate",
    "generate_synthetic",
    "rank_query",
]

__version__ = "0.1.0"
