"""Supervised lexical-entailment toolkit: pair features, classifiers, protocols."""

__version__ = "0.1.0"
