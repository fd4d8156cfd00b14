"""Exact-oracle analytics: optimum search, regret, width checks and cell census."""
