"""Ingestion module for the multi-manifold toolkit."""
from .generators import SphereLineSpec, gen_linear_patch, gen_sphere_line
from .loaders import CloudFormat, coordinate_columns, load_cloud

__all__ = [
    "CloudFormat",
    "SphereLineSpec",
    "coordinate_columns",
    "gen_linear_patch",
    "gen_sphere_line",
    "load_cloud",
]
