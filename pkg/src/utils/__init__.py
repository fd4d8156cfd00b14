"""Utility module for the contract lab."""
