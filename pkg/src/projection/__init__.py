"""Smooth projection onto spherical Gaussian mixture classes."""
