"""Pilot density estimators and width rules."""
