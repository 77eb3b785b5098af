"""Generalized cluster mutations on compatible pairs and their symplectic groupoid lifts."""

__version__ = "0.1.0"
