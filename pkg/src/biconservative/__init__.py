"""Normal-evolution construction and verification of biconservative hypersurfaces."""

__version__ = "0.1.0"
