"""Relational program semantics: refinement, absolute and relative correctness."""

__version__ = "0.1.0"
