"""Tests for smooth-projection-density."""
