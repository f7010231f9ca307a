"""Symbolic candidate generation: predicate enumeration, learned ranking
and beam search."""

from .beam import BeamCandidate, BeamConfig, Component, beam_synthesize
from .features import FEATURE_NAMES, FEATURE_VERSION, featurize, rule_category
from .predicates import enumerate_predicates
from .ranker import RankerModel, default_ranker, score_node, sub_conditions, train_ranker

__all__ = [
    "BeamCandidate",
    "BeamConfig",
    "Component",
    "FEATURE_NAMES",
    "FEATURE_VERSION",
    "RankerModel",
    "beam_synthesize",
    "default_ranker",
    "enumerate_predicates",
    "featurize",
    "rule_category",
    "score_node",
    "sub_conditions",
    "train_ranker",
]
