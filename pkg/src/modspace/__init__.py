"""Discrete metric-measure geometry: curve-family modulus with duality
certificates, Alberti representations, example spaces and splitting tests."""

from modspace.errors import ModspaceError
from modspace.metric import MetricGraph, PointCloud

__all__ = ["ModspaceError", "MetricGraph", "PointCloud"]
__version__ = "0.1.0"
