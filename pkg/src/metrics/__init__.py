"""Error metrics and region-mass functionals."""
