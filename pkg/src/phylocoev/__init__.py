"""Competitive co-evolution with phylogeny-informed interaction estimation."""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config
from .matchmaking import MatchPlan, PopulationView
from .outcomes import Estimate, InteractionKey, Outcome, OutcomeStore
from .phylogeny import Phylogeny

__all__ = [
    "ExperimentConfig",
    "load_config",
    "MatchPlan",
    "PopulationView",
    "Estimate",
    "InteractionKey",
    "Outcome",
    "OutcomeStore",
    "Phylogeny",
    "__version__",
]
