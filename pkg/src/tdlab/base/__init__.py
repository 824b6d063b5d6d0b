"""Abstract base classes."""
