"""Offline trajectory optimisation and scoring for sparse, cooperative aerial robot teams."""

__version__ = "0.1.0"
