"""Chip assembly, array evaluation and environment sweeps."""
