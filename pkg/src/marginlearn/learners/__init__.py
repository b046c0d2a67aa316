"""Proper learners for margin halfspaces, a perceptron baseline, and a brute-force oracle."""

from ._common import BudgetExceeded, CandidateSet, LearnReport
from .basic import learn_basic
from .chow import (
    chow_to_halfspace,
    chow_vector,
    empirical_chow,
    learn_alpha,
    learn_chow,
    learn_chow_explicit,
)
from .oracle import brute_force_erm
from .perceptron import perceptron
from .staged import learn_staged

__all__ = [
    "BudgetExceeded",
    "CandidateSet",
    "LearnReport",
    "brute_force_erm",
    "chow_to_halfspace",
    "chow_vector",
    "empirical_chow",
    "learn_alpha",
    "learn_basic",
    "learn_chow",
    "learn_chow_explicit",
    "learn_staged",
    "perceptron",
]
