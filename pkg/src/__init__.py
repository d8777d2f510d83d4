"""Norming-set laboratory for polynomial sections on the projective line."""

__version__ = "1.0.0"
