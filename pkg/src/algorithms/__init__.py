"""Bandit algorithms over contracts: adaptive zooming and non-adaptive baselines."""
