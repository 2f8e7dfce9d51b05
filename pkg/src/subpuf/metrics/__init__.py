"""Reliability, uniqueness and randomness metrics."""
