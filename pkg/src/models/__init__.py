"""Core data types: samples, mixtures and evaluation grids."""
