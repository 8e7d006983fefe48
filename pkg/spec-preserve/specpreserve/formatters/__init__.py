"""Output formatters for spec-preserve results."""
