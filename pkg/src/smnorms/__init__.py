"""Sensorimotor norm analytics.

Derived lexical metrics, reliability and cross-norm validation, Bayes-factor
regression on lexical decision data, embedding-based recovery of ratings and
representational similarity analysis.
"""

__version__ = "0.1.0"
