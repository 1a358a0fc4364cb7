"""Random Latin-square 2-complexes and their F_2 coboundary expansion."""

__version__ = "0.1.0"
