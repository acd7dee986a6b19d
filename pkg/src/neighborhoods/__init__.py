"""Neighborhood module for the multi-manifold toolkit."""
from .neighborhoods import (
    NeighborhoodIndex,
    NeighborhoodResult,
    NeighborhoodSpec,
    ball_neighborhood,
    dyadic_radii,
    knn_ladder,
    knn_neighborhood,
    radius_ladder,
)

__all__ = [
    "NeighborhoodIndex",
    "NeighborhoodResult",
    "NeighborhoodSpec",
    "ball_neighborhood",
    "dyadic_radii",
    "knn_ladder",
    "knn_neighborhood",
    "radius_ladder",
]
