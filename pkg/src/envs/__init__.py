"""Supply distributions and round-by-round market environments."""
