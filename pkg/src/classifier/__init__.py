"""Density-based Bayes classification."""
