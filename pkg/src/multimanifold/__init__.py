"""Dyadic linear multi-manifold module for the multi-manifold toolkit."""
from .dyadic import (
    BuildParams,
    DyadicCube,
    LinearComponent,
    MultiManifold,
    build_multimanifold,
    locate_leaf,
    root_cube,
    split_cube,
)

__all__ = [
    "BuildParams",
    "DyadicCube",
    "LinearComponent",
    "MultiManifold",
    "build_multimanifold",
    "locate_leaf",
    "root_cube",
    "split_cube",
]
