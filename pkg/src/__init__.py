"""Dynamic Contract Lab."""
