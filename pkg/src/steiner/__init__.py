"""Conics tangent to five conics: continuation, certification, and tooling."""

__version__ = "0.1.0"
