"""Result writers: JSON and CSV artifacts of fits, benchmarks and experiments."""
