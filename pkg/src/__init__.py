"""Smooth projection density estimation package."""
