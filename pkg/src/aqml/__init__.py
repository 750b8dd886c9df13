"""aqml: desk-scale simulations of hardened quantum-ML constructions."""

__version__ = "0.1.0"
