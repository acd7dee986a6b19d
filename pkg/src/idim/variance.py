"""
Variance-based intrinsic dimension for the multi-manifold toolkit.
Pointwise multiscale estimates, stratification by dimension and the
diagnostic color encodings used for plotting.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core import MultiManifoldError, PointCloud, as_points, centered_singular_values
from ..neighborhoods import NeighborhoodIndex, NeighborhoodSpec
from ..utils.helpers import parallel_map

logger = logging.getLogger(__name__)

UNDEFINED_CODE = -1


class IdParams(BaseModel):
    """Parameters of the variance-based local intrinsic dimension."""

    model_config = ConfigDict(frozen=True)

    t: float = Field(default=0.95, gt=0.0, le=1.0, description="Variance threshold")
    c: int = Field(default=10, ge=1, description="Cutoff: neighborhoods need more than c points")
    spec: NeighborhoodSpec = Field(description="Neighborhood scales")


@dataclass(frozen=True)
class LocalIdRecord:
    """Per-point dimension with the per-scale evidence behind it. ``None`` means Undefined."""

    point_id: int
    dimension: Optional[int]
    per_scale_dims: List[Tuple[float, Optional[int]]]
    argmin_scale_index: Optional[int]
    energy: float

    @property
    def defined(self) -> bool:
        return self.dimension is not None


@dataclass(frozen=True)
class Strata:
    """Indices grouped by dimension; Undefined points are kept apart."""

    groups: Dict[int, np.ndarray]
    unclassified: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    @property
    def dims(self) -> List[int]:
        return sorted(self.groups)

    def counts(self) -> Dict[int, int]:
        return {dim: int(self.groups[dim].size) for dim in self.dims}

    def labels(self, n_points: int) -> np.ndarray:
        """Stratum per point, -1 for unclassified."""
        labels = np.full(n_points, UNDEFINED_CODE, dtype=np.int64)
        for dim, ids in self.groups.items():
            labels[ids] = dim
        return labels


def dimension_from_sigma(sigma: np.ndarray, t: float) -> int:
    """Smallest i with sum_{j<=i} sigma_j^2 >= t * sum_j sigma_j^2; 0 for a point mass."""
    cumulative = np.cumsum(sigma * sigma)
    if cumulative.size == 0 or cumulative[-1] <= 0.0:
        return 0
    index = int(np.searchsorted(cumulative, t * cumulative[-1], side="left"))
    return min(index + 1, cumulative.size)


def d_vid(points, t: float, c: int) -> Optional[int]:
    """Variance-based intrinsic dimension of a point set, ``None`` when |points| <= c."""
    if not 0.0 < t <= 1.0:
        raise MultiManifoldError(f"Variance threshold must lie in (0, 1], got {t}", "bad-threshold")
    array = as_points(points)
    if array.shape[0] <= c:
        return None
    return dimension_from_sigma(centered_singular_values(array), t)


def d_vlid(
    cloud: PointCloud,
    p: int,
    params: IdParams,
    index: Optional[NeighborhoodIndex] = None,
) -> LocalIdRecord:
    """Minimum of d_vid over the scales whose neighborhood has more than c points."""
    index = index or NeighborhoodIndex(cloud)
    hood = index.neighborhoods(p, params.spec)

    per_scale: List[Tuple[float, Optional[int]]] = []
    energies: List[float] = []
    for scale, members in hood.per_scale:
        if members.size <= params.c:
            per_scale.append((scale, None))
            continue
        sigma = centered_singular_values(cloud.points[members])
        per_scale.append((scale, dimension_from_sigma(sigma, params.t)))
        energies.append(float(np.sum(sigma * sigma)))

    defined = [dim for _, dim in per_scale if dim is not None]
    if not defined:
        return LocalIdRecord(p, None, per_scale, None, 0.0)
    dimension = min(defined)
    argmin = next(j for j, (_, dim) in enumerate(per_scale) if dim == dimension)
    return LocalIdRecord(p, dimension, per_scale, argmin, float(np.mean(energies)))


def compute_all_ids(
    cloud: PointCloud,
    params: IdParams,
    max_workers: Optional[int] = None,
    accelerate: bool = True,
) -> List[LocalIdRecord]:
    """One record per point, in index order."""
    cloud.require_non_empty()
    index = NeighborhoodIndex(cloud, accelerate=accelerate)
    records = parallel_map(lambda p: d_vlid(cloud, p, params, index), range(len(cloud)), max_workers)
    undefined = sum(1 for record in records if not record.defined)
    logger.info(
        "Computed local intrinsic dimensions for %d points (%d undefined, %s, %d scales)",
        len(records), undefined, params.spec.kind, len(params.spec),
    )
    return records


def stratify(records: Sequence[LocalIdRecord]) -> Strata:
    """Group point indices by their local intrinsic dimension."""
    if len(records) == 0:
        raise MultiManifoldError("Cannot stratify an empty record list", "empty-set")
    buckets: Dict[int, List[int]] = {}
    unclassified: List[int] = []
    for record in records:
        if record.dimension is None:
            unclassified.append(record.point_id)
        else:
            buckets.setdefault(record.dimension, []).append(record.point_id)
    groups = {dim: np.asarray(sorted(ids), dtype=np.intp) for dim, ids in sorted(buckets.items())}
    return Strata(groups=groups, unclassified=np.asarray(sorted(unclassified), dtype=np.intp))


def diagnostic_encodings(records: Sequence[LocalIdRecord], spec: NeighborhoodSpec) -> List[Tuple[int, float]]:
    """(lex_code, energy) per point: dimension * |spec| - argmin scale index, or (-1, 0).

    Dimension-0 points all get code 0 so they stay apart from the undefined code.
    """
    scales = len(spec)
    encodings: List[Tuple[int, float]] = []
    for record in records:
        if record.dimension is None:
            encodings.append((UNDEFINED_CODE, 0.0))
        else:
            code = record.dimension * scales - record.argmin_scale_index
            encodings.append((max(code, 0), record.energy))
    return encodings


def dimension_agreement(records_a: Sequence[LocalIdRecord], records_b: Sequence[LocalIdRecord]) -> float:
    """Fraction of points, defined in both runs, whose dimensions agree."""
    if len(records_a) != len(records_b):
        raise MultiManifoldError("Record lists differ in length", "length-mismatch")
    both = [(a.dimension, b.dimension) for a, b in zip(records_a, records_b) if a.defined and b.defined]
    if not both:
        return 0.0
    return sum(1 for a, b in both if a == b) / len(both)
