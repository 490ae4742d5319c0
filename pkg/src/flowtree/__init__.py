"""Operator calculus of the flow Laplacian on homogeneous trees."""

__version__ = "0.1.0"
