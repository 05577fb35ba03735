"""Preference-based reward learning for a two-car driving scenario:
Bayesian weight learning from pairwise comparisons, active query
generation, and offline learning of a neural-network reward feature."""

__all__ = [
    "belief",
    "cli",
    "dynamics",
    "featlearn",
    "features",
    "oracle",
    "querygen",
    "server",
    "session",
]
