"""corrkit: finite-dimensional twisted tensor products of C*-correspondences."""
__version__ = "0.1.0"
