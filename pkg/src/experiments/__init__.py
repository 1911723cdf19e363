"""Benchmark and demonstration runners."""
