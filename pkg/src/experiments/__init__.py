"""Experiment configuration, seeded multi-run execution and verification suites."""
