"""spec-preserve package."""
