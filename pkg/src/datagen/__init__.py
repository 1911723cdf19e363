"""True densities and seeded generators."""
