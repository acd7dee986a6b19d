"""
Synthetic Data Generators for the multi-manifold toolkit.
Sphere-plus-line clouds and random linear patches, deterministic given a seed.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core import MultiManifoldError, PointCloud

logger = logging.getLogger(__name__)


class SphereLineSpec(BaseModel):
    """A sphere centered at the origin pierced by a line along the x-axis."""

    model_config = ConfigDict(frozen=True)

    n_sphere: int = Field(default=2513, ge=0, description="Points sampled on the sphere")
    n_line: int = Field(default=193, ge=0, description="Points sampled on the two line segments")
    radius: float = Field(default=0.5, gt=0.0, description="Sphere radius")
    line_intervals: Tuple[Tuple[float, float], Tuple[float, float]] = Field(
        default=((-1.0, -0.5), (0.5, 1.0)), description="x-axis intervals carrying the line"
    )
    seed: int = Field(default=0, description="Random seed")
    area_uniform: bool = Field(default=False, description="Area-uniform sphere sampling instead of angle-uniform")

    @model_validator(mode="after")
    def _check_intervals(self) -> "SphereLineSpec":
        for lo, hi in self.line_intervals:
            if not lo < hi:
                raise ValueError(f"line interval [{lo}, {hi}] is degenerate")
            if hi > -self.radius and lo < self.radius:
                raise ValueError(f"line interval [{lo}, {hi}] enters the open ball of radius {self.radius}")
        (lo_a, hi_a), (lo_b, hi_b) = self.line_intervals
        if hi_a > lo_b and hi_b > lo_a:
            raise ValueError("line intervals overlap")
        return self

    @property
    def total(self) -> int:
        return self.n_sphere + self.n_line


def _sphere_points(rng: np.random.Generator, n: int, radius: float, area_uniform: bool) -> np.ndarray:
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    if area_uniform:
        theta = np.arccos(rng.uniform(-1.0, 1.0, n))
    else:
        theta = rng.uniform(0.0, np.pi, n)
    directions = np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    # renormalize so every norm equals the radius to rounding
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return radius * directions


def _line_points(rng: np.random.Generator, n: int, intervals) -> np.ndarray:
    lows = np.array([lo for lo, _ in intervals])
    lengths = np.array([hi - lo for lo, hi in intervals])
    # interval picked with probability proportional to its length
    which = (rng.random(n) >= lengths[0] / lengths.sum()).astype(np.intp)
    points = np.zeros((n, 3))
    points[:, 0] = lows[which] + rng.random(n) * lengths[which]
    return points


def gen_sphere_line(spec: Optional[SphereLineSpec] = None) -> PointCloud:
    """Sphere points first (angle-uniform unless ``area_uniform``), then line points."""
    spec = spec or SphereLineSpec()
    rng = np.random.default_rng(spec.seed)
    sphere = _sphere_points(rng, spec.n_sphere, spec.radius, spec.area_uniform)
    line = _line_points(rng, spec.n_line, spec.line_intervals)
    logger.info(
        "Generated sphere-line cloud: %d points (%d sphere + %d line)", spec.total, spec.n_sphere, spec.n_line
    )
    return PointCloud(np.vstack([sphere, line]))


def gen_linear_patch(n: int, d: int, D: int, seed: int = 0, noise: float = 0.0, side: float = 1.0) -> PointCloud:
    """Points uniform on a d-dimensional cube embedded in R^D by a random orthonormal frame and offset."""
    if n < 1:
        raise MultiManifoldError(f"Patch needs at least one point, got {n}", "empty-set")
    if d < 0 or d > D:
        raise MultiManifoldError(f"Patch dimension {d} must lie in [0, {D}]", "dimension-exceeds-ambient")
    rng = np.random.default_rng(seed)
    origin = rng.normal(size=D)
    if d == 0:
        points = np.tile(origin, (n, 1))
    else:
        frame, _ = np.linalg.qr(rng.normal(size=(D, d)))
        coords = rng.uniform(-0.5 * side, 0.5 * side, size=(n, d))
        points = origin + coords @ frame.T
    if noise > 0.0:
        points = points + noise * rng.normal(size=points.shape)
    return PointCloud(points)
