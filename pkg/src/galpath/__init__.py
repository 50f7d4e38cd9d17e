"""Galilei symmetry, path-integral propagators and Lie-algebra cohomology at desk scale."""

__version__ = "0.1.0"
