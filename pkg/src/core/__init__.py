"""Core geometry module for the multi-manifold toolkit."""
from .errors import MultiManifoldError
from .geometry import (
    AffineSubspace,
    PointCloud,
    SvdSummary,
    as_points,
    best_fit_affine,
    center_and_svd,
    centered_singular_values,
    residual_sqd_exact,
    subspace_from_summary,
    tail_variance,
    total_variance,
)

__all__ = [
    "AffineSubspace",
    "MultiManifoldError",
    "PointCloud",
    "SvdSummary",
    "as_points",
    "best_fit_affine",
    "center_and_svd",
    "centered_singular_values",
    "residual_sqd_exact",
    "subspace_from_summary",
    "tail_variance",
    "total_variance",
]
