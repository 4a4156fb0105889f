"""Bayesian nonparametric species-sampling inference under the Pitman-Yor prior."""
from . import combinatorics, coverage, data, fit, prevalence, pyp, unseen
from .data import SampleSummary, from_counts, from_fingerprint, from_labels
from .pyp import PartitionState, PypParams, RngStream

__version__ = "0.1.0"

__all__ = [
    "combinatorics",
    "coverage",
    "data",
    "fit",
    "prevalence",
    "pyp",
    "unseen",
    "SampleSummary",
    "from_counts",
    "from_fingerprint",
    "from_labels",
    "PartitionState",
    "PypParams",
    "RngStream",
]
