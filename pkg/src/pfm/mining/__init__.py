"""Temporal pattern matching, heatmap generation, and rule verification."""

from .patterns import Condition, EventPattern, Occurrence, StepPredicate, find_occurrences
from .heatmap import CategorySpec, Heatmap, cooccurrence_matrix, generate_candidates
from .matching import ContextGroup, Unit, contextual_match, equal_frequency_edges
from .stats import benjamini_hochberg, bootstrap_sign_validity, permutation_test
from .verify import (
    ConfounderSelector,
    ContextResult,
    Hypothesis,
    OutcomeSelector,
    VerifiedRule,
    verify,
)

__all__ = [
    "Condition", "EventPattern", "Occurrence", "StepPredicate", "find_occurrences",
    "CategorySpec", "Heatmap", "cooccurrence_matrix", "generate_candidates",
    "ContextGroup", "Unit", "contextual_match", "equal_frequency_edges",
    "benjamini_hochberg", "bootstrap_sign_validity", "permutation_test",
    "ConfounderSelector", "ContextResult", "Hypothesis", "OutcomeSelector",
    "VerifiedRule", "verify",
]
