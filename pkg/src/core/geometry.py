"""
Geometry Module for the multi-manifold toolkit.
Point clouds, centered SVD summaries and best-fit affine subspaces.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import MultiManifoldError

ORTHONORMAL_TOL = 1e-9

PointsLike = Union["PointCloud", np.ndarray, Sequence[Sequence[float]]]


def as_points(points: PointsLike) -> np.ndarray:
    """Return ``points`` as a float64 array of shape (n, D)."""
    if isinstance(points, PointCloud):
        return points.points
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    if array.ndim != 2:
        raise MultiManifoldError(f"Expected an (n, D) point array, got shape {array.shape}", "bad-shape")
    return array


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PointCloud:
    """An ordered set of points in R^D; a point's identity is its row index."""

    points: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.points, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] < 1:
            raise MultiManifoldError(
                f"Point cloud must be an (n, D) array with D >= 1, got shape {array.shape}", "bad-shape"
            )
        if not np.all(np.isfinite(array)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(array), axis=1))[0])
            raise MultiManifoldError("Point cloud contains non-finite coordinates", "non-finite", {"point": bad})
        object.__setattr__(self, "points", _frozen(array))

    @property
    def dim(self) -> int:
        """Ambient dimension D."""
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def subset(self, ids: Sequence[int]) -> np.ndarray:
        """Coordinates of the points with the given indices."""
        return self.points[np.asarray(ids, dtype=np.intp)]

    def diameter(self) -> float:
        """Maximum over coordinate axes of (max - min)."""
        if len(self) == 0:
            return 0.0
        return float(np.max(np.ptp(self.points, axis=0)))

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "PointCloud":
        """Apply x -> Q x + v to every point."""
        return PointCloud(self.points @ np.asarray(rotation).T + np.asarray(translation))

    def require_non_empty(self) -> None:
        if len(self) == 0:
            raise MultiManifoldError("Point cloud is empty", "empty-set")


@dataclass(frozen=True)
class SvdSummary:
    """Centroid, singular values and right-singular basis of a centered point set.

    ``singular_values`` has length min(n, D), sorted non-increasing; ``basis`` holds
    the matching right-singular vectors as rows.
    """

    mean: np.ndarray
    singular_values: np.ndarray
    basis: np.ndarray
    count: int

    @property
    def squared(self) -> np.ndarray:
        return self.singular_values ** 2


@dataclass(frozen=True)
class AffineSubspace:
    """origin + span(basis); ``basis`` rows are orthonormal. d = 0 is the point {origin}."""

    origin: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(-1)
        basis = np.asarray(self.basis, dtype=np.float64).reshape(-1, origin.shape[0])
        if basis.shape[0] > origin.shape[0]:
            raise MultiManifoldError(
                f"Subspace dimension {basis.shape[0]} exceeds ambient dimension {origin.shape[0]}",
                "dimension-exceeds-ambient",
            )
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=ORTHONORMAL_TOL, rtol=0.0):
            raise MultiManifoldError("Subspace basis is not orthonormal", "non-orthonormal")
        object.__setattr__(self, "origin", _frozen(origin))
        object.__setattr__(self, "basis", _frozen(basis))

    @property
    def d(self) -> int:
        return int(self.basis.shape[0])

    @property
    def ambient_dim(self) -> int:
        return int(self.origin.shape[0])

    def project(self, points: PointsLike) -> np.ndarray:
        """Orthogonal projection of each point onto the subspace."""
        centered = as_points(points) - self.origin
        return self.origin + (centered @ self.basis.T) @ self.basis

    def transported(self, rotation: np.ndarray, translation: np.ndarray) -> "AffineSubspace":
        """The image of this subspace under x -> Q x + v."""
        rotation = np.asarray(rotation, dtype=np.float64)
        return AffineSubspace(rotation @ self.origin + translation, self.basis @ rotation.T)


def centered_singular_values(points: PointsLike) -> np.ndarray:
    """Singular values of the centered point matrix, without the basis."""
    array = as_points(points)
    if array.shape[0] == 0:
        raise MultiManifoldError("Cannot summarize an empty point set", "empty-set")
    return np.linalg.svd(array - array.mean(axis=0), compute_uv=False)


def center_and_svd(points: PointsLike) -> SvdSummary:
    """SVD of ``points - mean(points)`` computed on the n x D matrix itself."""
    array = as_points(points)
    if array.shape[0] == 0:
        raise MultiManifoldError("Cannot summarize an empty point set", "empty-set")
    mean = array.mean(axis=0)
    _, sigma, vt = np.linalg.svd(array - mean, full_matrices=False)
    return SvdSummary(mean=_frozen(mean), singular_values=_frozen(sigma), basis=_frozen(vt), count=int(array.shape[0]))


def total_variance(summary: SvdSummary) -> float:
    """Sum of squared singular values (not normalized by the point count)."""
    return float(np.sum(summary.squared))


def tail_variance(summary: SvdSummary, d: int) -> float:
    """Sum of squared singular values beyond the first ``d``."""
    return float(np.sum(summary.squared[d:]))


def _complete_basis(basis: np.ndarray, d: int, ambient: int) -> np.ndarray:
    """Extend orthonormal rows to ``d`` rows with vectors orthogonal to them."""
    if basis.shape[0] >= d:
        return basis[:d]
    if basis.shape[0] == 0:
        return np.eye(ambient)[:d]
    # trailing right-singular vectors of the basis span its orthogonal complement
    _, _, vt = np.linalg.svd(basis, full_matrices=True)
    complement = vt[basis.shape[0]:]
    return np.vstack([basis, complement[: d - basis.shape[0]]])


def subspace_from_summary(summary: SvdSummary, d: int) -> AffineSubspace:
    """Affine subspace through the centroid spanned by the leading d right-singular vectors."""
    return AffineSubspace(summary.mean, _complete_basis(summary.basis, d, summary.mean.shape[0]))


def best_fit_affine(points: PointsLike, d: int) -> AffineSubspace:
    """The d-dimensional affine subspace minimizing total squared orthogonal distance."""
    array = as_points(points)
    ambient = array.shape[1]
    if d < 0:
        raise MultiManifoldError(f"Subspace dimension must be non-negative, got {d}", "bad-dimension")
    if d > ambient:
        raise MultiManifoldError(
            f"Requested dimension {d} exceeds ambient dimension {ambient}",
            "dimension-exceeds-ambient",
        )
    return subspace_from_summary(center_and_svd(array), d)


def residual_sqd_exact(points: PointsLike, subspace: AffineSubspace) -> float:
    """Sum over points of the squared Euclidean distance to ``subspace``."""
    array = as_points(points)
    if array.shape[0] == 0:
        return 0.0
    if subspace.ambient_dim != array.shape[1]:
        raise MultiManifoldError(
            f"Subspace lives in R^{subspace.ambient_dim}, points in R^{array.shape[1]}", "ambient-mismatch"
        )
    residual = array - subspace.project(array)
    return float(np.sum(residual * residual))
