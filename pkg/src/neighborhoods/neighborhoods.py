"""
Neighborhood Module for the multi-manifold toolkit.
Closed Euclidean balls and k-nearest-neighbor sets around design points,
with a cKDTree-backed index that always agrees with the brute-force scan.
"""
import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator
from scipy.spatial import cKDTree

from ..core import MultiManifoldError, PointCloud

logger = logging.getLogger(__name__)

# candidate queries are padded so the exact squared-distance filter decides membership
_PAD_RELATIVE = 1e-9
_PAD_ABSOLUTE = 1e-300


class NeighborhoodSpec(BaseModel):
    """The list L of neighborhood scales: radii (descending) or neighbor counts (ascending)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["ball-radii", "knn-counts"] = Field(description="Neighborhood construction")
    values: Tuple[float, ...] = Field(description="Radii r_i (descending) or counts k (ascending)")

    @field_validator("values")
    @classmethod
    def _check_monotone(cls, values: Tuple[float, ...], info: ValidationInfo) -> Tuple[float, ...]:
        if len(values) == 0:
            raise ValueError("neighborhood list must be non-empty")
        array = np.asarray(values, dtype=np.float64)
        if info.data.get("kind") == "ball-radii":
            if np.any(array <= 0):
                raise ValueError("radii must be positive")
            if np.any(np.diff(array) >= 0):
                raise ValueError("radii must be strictly descending")
            return values
        if np.any(array < 1) or np.any(array != np.round(array)):
            raise ValueError("neighbor counts must be integers >= 1")
        if np.any(np.diff(array) <= 0):
            raise ValueError("neighbor counts must be strictly ascending")
        return tuple(int(v) for v in array)

    @classmethod
    def ball(cls, radii: Sequence[float]) -> "NeighborhoodSpec":
        return cls(kind="ball-radii", values=tuple(float(r) for r in radii))

    @classmethod
    def knn(cls, counts: Sequence[int]) -> "NeighborhoodSpec":
        return cls(kind="knn-counts", values=tuple(int(k) for k in counts))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NeighborhoodResult:
    """Member index sets of one center point, one entry per scale of the NeighborhoodSpec."""

    center_id: int
    per_scale: List[Tuple[float, np.ndarray]]


def _squared_distances(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    # shared by the scan and the index so both apply the identical predicate
    diff = points - center
    return (diff * diff).sum(axis=1)


def _check_center(cloud: PointCloud, center: int) -> None:
    if not 0 <= center < len(cloud):
        raise MultiManifoldError(f"Center index {center} outside cloud of {len(cloud)} points", "bad-center")


def _knn_order(sq: np.ndarray, ids: np.ndarray, center: int) -> np.ndarray:
    # distance, then the center before any duplicate of it, then lower index
    return ids[np.lexsort((ids, ids != center, sq))]


def ball_neighborhood(cloud: PointCloud, center: int, radius: float) -> np.ndarray:
    """All indices j with ||x_j - x_center|| <= radius (closed ball, O(n) scan)."""
    if radius <= 0:
        raise MultiManifoldError(f"Radius must be positive, got {radius}", "bad-radius")
    _check_center(cloud, center)
    sq = _squared_distances(cloud.points, cloud.points[center])
    return np.flatnonzero(sq <= radius * radius)


def knn_neighborhood(cloud: PointCloud, center: int, k: int) -> np.ndarray:
    """The k indices nearest to ``center`` (center included), ties to the lower index."""
    _check_center(cloud, center)
    if k < 1:
        raise MultiManifoldError(f"k must be at least 1, got {k}", "bad-k")
    if k > len(cloud):
        raise MultiManifoldError(f"k = {k} exceeds cloud size {len(cloud)}", "k-exceeds-cloud")
    sq = _squared_distances(cloud.points, cloud.points[center])
    return _knn_order(sq, np.arange(len(cloud)), center)[:k]


def dyadic_radii(cloud: PointCloud, scale_lo: int, scale_hi: int) -> List[float]:
    """Radii diam * 2^-s for s = scale_lo..scale_hi; diam is the largest coordinate extent."""
    if scale_lo > scale_hi:
        raise MultiManifoldError(f"scale_lo {scale_lo} > scale_hi {scale_hi}", "bad-scales")
    diam = cloud.diameter()
    if diam <= 0:
        raise MultiManifoldError("Cloud has zero diameter; dyadic radii are undefined", "degenerate-diameter")
    return [diam * 2.0 ** (-s) for s in range(scale_lo, scale_hi + 1)]


def radius_ladder(hi: float, lo: float, step: float) -> List[float]:
    """Arithmetic radii from ``hi`` down to ``lo`` inclusive, e.g. 2, 1.9, ..., 0.1."""
    if step <= 0 or lo <= 0 or hi < lo:
        raise MultiManifoldError(f"Invalid radius ladder {hi}:{lo}:{step}", "bad-ladder")
    count = int(round((hi - lo) / step)) + 1
    return [round(hi - j * step, 12) for j in range(count)]


def knn_ladder(lo: int, hi: int, step: int) -> List[int]:
    """Neighbor counts lo, lo + step, ..., up to hi inclusive."""
    if step <= 0 or lo < 1 or hi < lo:
        raise MultiManifoldError(f"Invalid kNN ladder {lo}:{hi}:{step}", "bad-ladder")
    return list(range(lo, hi + 1, step))


class NeighborhoodIndex:
    """Neighborhood queries over a frozen cloud.

    The cKDTree only proposes candidates; membership and ordering are decided by the
    same squared-distance predicate as the brute-force scan, so results are identical.
    """

    def __init__(self, cloud: PointCloud, accelerate: bool = True, leafsize: int = 16):
        cloud.require_non_empty()
        self.cloud = cloud
        self._points = cloud.points
        self._tree: Optional[cKDTree] = cKDTree(self._points, leafsize=leafsize) if accelerate else None
        logger.debug("Neighborhood index over %d points (accelerated=%s)", len(cloud), accelerate)

    @property
    def accelerated(self) -> bool:
        return self._tree is not None

    def _candidates(self, center: int, radius: float) -> np.ndarray:
        if self._tree is None:
            return np.arange(len(self.cloud))
        padded = radius * (1.0 + _PAD_RELATIVE) + _PAD_ABSOLUTE
        found = self._tree.query_ball_point(self._points[center], padded)
        return np.sort(np.asarray(found, dtype=np.intp))

    def _kth_distance(self, center: int, k: int) -> float:
        if self._tree is None:
            return np.inf
        distances, _ = self._tree.query(self._points[center], k=k)
        return float(np.atleast_1d(distances)[-1])

    def ball(self, center: int, radius: float) -> np.ndarray:
        return self.balls(center, [radius])[0]

    def balls(self, center: int, radii: Sequence[float]) -> List[np.ndarray]:
        """Closed balls around ``center`` for every radius, from a single candidate query."""
        _check_center(self.cloud, center)
        if min(radii) <= 0:
            raise MultiManifoldError("Radii must be positive", "bad-radius")
        candidates = self._candidates(center, max(radii))
        sq = _squared_distances(self._points[candidates], self._points[center])
        return [candidates[sq <= r * r] for r in radii]

    def knn(self, center: int, k: int) -> np.ndarray:
        return self.knn_sets(center, [k])[0]

    def knn_sets(self, center: int, counts: Sequence[int]) -> List[np.ndarray]:
        """Nested kNN sets for every count; each is a prefix of one ordered candidate list."""
        _check_center(self.cloud, center)
        k_max = max(counts)
        if min(counts) < 1:
            raise MultiManifoldError("Neighbor counts must be at least 1", "bad-k")
        if k_max > len(self.cloud):
            raise MultiManifoldError(f"k = {k_max} exceeds cloud size {len(self.cloud)}", "k-exceeds-cloud")
        candidates = self._candidates(center, self._kth_distance(center, k_max))
        sq = _squared_distances(self._points[candidates], self._points[center])
        ordered = _knn_order(sq, candidates, center)
        return [ordered[:k] for k in counts]

    def neighborhoods(self, center: int, spec: NeighborhoodSpec) -> NeighborhoodResult:
        """Member sets of ``center`` for every scale in ``spec``."""
        if spec.kind == "ball-radii":
            members = self.balls(center, spec.values)
        else:
            members = self.knn_sets(center, [int(k) for k in spec.values])
        return NeighborhoodResult(center_id=center, per_scale=list(zip(spec.values, members)))
