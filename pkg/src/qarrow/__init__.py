"""Exact, spectral and Monte Carlo tools for IIA constitutions on ranked ballots."""

__version__ = "0.1.0"

from .core import Profile, Ranking, VoteDistribution  # noqa: E402
from .constitution import (  # noqa: E402
    Constitution,
    evaluate,
    is_transitive,
    paradox_probability_exact,
    paradox_probability_kalai,
)
from .family import FamilyStructure, enumerate_family, project_to_family, structure_of  # noqa: E402

__all__ = [
    "__version__",
    "Constitution",
    "FamilyStructure",
    "Profile",
    "Ranking",
    "VoteDistribution",
    "enumerate_family",
    "evaluate",
    "is_transitive",
    "paradox_probability_exact",
    "paradox_probability_kalai",
    "project_to_family",
    "structure_of",
]
