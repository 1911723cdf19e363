"""Parametric baselines."""
