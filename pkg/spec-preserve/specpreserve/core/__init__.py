"""Core modules for spec-preserve."""
