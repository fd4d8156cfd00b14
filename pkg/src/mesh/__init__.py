"""Candidate contract sets and dyadic cell geometry of increment space."""
