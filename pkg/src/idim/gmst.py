"""
Local GMST intrinsic dimension for the multi-manifold toolkit.
Fits the kNN-graph edge-length growth law L(n) = a * n^((d - gamma) / d)
over a ladder of sample sizes around each sampled point.

By default every size n is a random n-subset of the largest neighborhood, so the
sampling domain stays fixed while n grows. The fitted exponent is then read off
a table of exponents measured the same way on uniform samples of unit d-balls,
which cancels the negative bias the domain boundary puts on kNN edge lengths.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import cKDTree

from ..core import MultiManifoldError, PointCloud
from ..neighborhoods import NeighborhoodIndex
from ..utils.helpers import parallel_map

logger = logging.getLogger(__name__)

# uniform-ball samples averaged per calibrated dimension
CALIBRATION_REPLICATES = 8
# dimensions above this use the closed-form growth law
CALIBRATION_MAX_DIM = 12


class GmstParams(BaseModel):
    """Settings of the local GMST estimator."""

    model_config = ConfigDict(frozen=True)

    n_range: Tuple[int, ...] = Field(default=tuple(range(200, 401, 25)), description="Neighborhood sizes n")
    k: int = Field(default=5, ge=1, description="Neighbors per point in the kNN graph")
    gamma: float = Field(default=1.0, gt=0.0, description="Edge-length exponent")
    averaging: Literal["joint", "pairwise"] = Field(
        default="joint", description="One fit over all sizes, or per consecutive pair then averaged"
    )
    sampling: Literal["subsample", "nested"] = Field(
        default="subsample", description="Random subsets of the largest neighborhood, or the n nearest points"
    )
    resamples: int = Field(default=5, ge=1, description="Random subsets averaged per size when subsampling")
    normalize_scale: bool = Field(default=True, description="Rescale each neighborhood to unit radius")
    calibrate: bool = Field(default=True, description="Read d off uniform-ball exponents instead of gamma / (1 - e)")
    seed: int = Field(default=0, ge=0, description="Seed of the subsets and the calibration samples")

    @model_validator(mode="after")
    def _check_sizes(self) -> "GmstParams":
        if len(self.n_range) == 0:
            raise ValueError("n_range must be non-empty")
        if min(self.n_range) <= self.k:
            raise ValueError("every neighborhood size must exceed k")
        return self


@dataclass(frozen=True)
class GmstFit:
    """Result of the growth-law fit at one point."""

    point_id: int
    n_values: List[int]
    edge_lengths: List[float]
    a: float
    d_est: float
    d_rounded: int
    clamped: bool = False
    residual: float = 0.0


def gmst_edge_length(cloud: PointCloud, members: Sequence[int], k: int, gamma: float) -> float:
    """Total gamma-weighted edge length of the kNN graph restricted to ``members``."""
    members = np.asarray(members, dtype=np.intp)
    if k < 1:
        raise MultiManifoldError(f"k must be at least 1, got {k}", "bad-k")
    if gamma <= 0:
        raise MultiManifoldError(f"gamma must be positive, got {gamma}", "bad-gamma")
    if k >= members.size:
        raise MultiManifoldError(
            f"k = {k} needs more than {k} members, got {members.size}", "k-exceeds-neighborhood"
        )
    points = cloud.points[members]
    # k + 1 columns: the zero self-distance adds nothing to the sum
    distances, _ = cKDTree(points).query(points, k=k + 1)
    return float(np.sum(distances ** gamma))


def _radius(cloud: PointCloud, p: int, members: np.ndarray) -> float:
    offsets = cloud.points[members] - cloud.points[p]
    return float(np.sqrt(np.max((offsets * offsets).sum(axis=1))))


def _growth_curve(
    cloud: PointCloud,
    p: int,
    n_values: np.ndarray,
    k: int,
    gamma: float,
    sampling: str,
    resamples: int,
    normalize_scale: bool,
    rng: np.random.Generator,
    index: NeighborhoodIndex,
) -> np.ndarray:
    """Edge lengths L(n) around ``p`` for every n in ascending ``n_values``."""
    lengths = []
    if sampling == "nested":
        for members in index.knn_sets(p, [int(n) for n in n_values]):
            length = gmst_edge_length(cloud, members, k, gamma)
            radius = _radius(cloud, p, members) if normalize_scale else 0.0
            lengths.append(length / radius ** gamma if radius > 0.0 else length)
        return np.asarray(lengths, dtype=np.float64)

    support = index.knn_sets(p, [int(n_values[-1])])[0]
    radius = _radius(cloud, p, support) if normalize_scale else 0.0
    scale = radius ** gamma if radius > 0.0 else 1.0
    for n in n_values:
        draws = 1 if n == support.size else resamples
        total = 0.0
        for _ in range(draws):
            members = np.sort(rng.choice(support, size=int(n), replace=False))
            total += gmst_edge_length(cloud, members, k, gamma)
        lengths.append(total / draws / scale)
    return np.asarray(lengths, dtype=np.float64)


def _uniform_ball_cloud(rng: np.random.Generator, n: int, d: int) -> PointCloud:
    """The origin plus n - 1 points uniform in the unit d-ball."""
    directions = rng.normal(size=(n - 1, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.random(n - 1) ** (1.0 / d)
    return PointCloud(np.vstack([np.zeros((1, d)), directions * radii[:, None]]))


@lru_cache(maxsize=32)
def calibration_table(
    ambient: int,
    n_values: Tuple[int, ...],
    k: int,
    gamma: float,
    sampling: str,
    resamples: int,
    seed: int,
) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Mean growth-law exponent per dimension 1..min(ambient, CALIBRATION_MAX_DIM) on uniform balls.

    Returns (exponents, dimensions), trimmed to a strictly increasing run of exponents.
    """
    x = np.log(np.asarray(n_values, dtype=np.float64))
    exponents: List[float] = []
    dims: List[float] = []
    for d in range(1, min(ambient, CALIBRATION_MAX_DIM) + 1):
        rng = np.random.default_rng([seed, d])
        slopes = []
        for _ in range(CALIBRATION_REPLICATES):
            ball = _uniform_ball_cloud(rng, n_values[-1], d)
            curve = _growth_curve(
                ball, 0, np.asarray(n_values), k, gamma, sampling, resamples, True, rng, NeighborhoodIndex(ball)
            )
            slopes.append(np.polyfit(x, np.log(curve), 1)[0])
        exponent = float(np.mean(slopes))
        if exponents and exponent <= exponents[-1]:
            logger.debug("Calibration exponent for d = %d does not increase; table stops at d = %d", d, d - 1)
            break
        exponents.append(exponent)
        dims.append(float(d))
    logger.debug("GMST calibration over d = 1..%d: %s", len(dims), np.round(exponents, 4).tolist())
    return tuple(exponents), tuple(dims)


def _dimension_from_exponent(
    exponent: float, gamma: float, ambient: int, table: Optional[Tuple[Sequence[float], Sequence[float]]] = None
) -> Tuple[float, bool]:
    if not np.isfinite(exponent):
        return float(ambient), True
    if table is not None and len(table[0]) >= 2:
        exponents, dims = table
        if exponent < exponents[0]:
            return dims[0], True
        if exponent <= exponents[-1]:
            return float(np.interp(exponent, exponents, dims)), False
        if dims[-1] >= ambient:
            return float(ambient), True
        # past the calibrated range the closed form takes over, never below the last entry
        closed, clamped = _dimension_from_exponent(exponent, gamma, ambient)
        return max(closed, dims[-1]), clamped
    if exponent >= 1.0:
        return float(ambient), True
    d = gamma / (1.0 - exponent)
    if d < 1.0:
        return 1.0, True
    if d > ambient:
        return float(ambient), True
    return float(d), False


def _fit_growth_law(
    n_values: np.ndarray,
    lengths: np.ndarray,
    gamma: float,
    ambient: int,
    averaging: str,
    point_id: int,
    table: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
) -> Tuple[float, float, bool, float]:
    trace = [(int(n), float(length)) for n, length in zip(n_values, lengths)]
    if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0):
        raise MultiManifoldError(
            "Edge lengths must be positive and finite for the log-log fit", "gmst-fit-failed",
            {"point": point_id, "trace": trace},
        )
    x = np.log(n_values.astype(np.float64))
    y = np.log(lengths)
    exponent, log_a = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (exponent * x + log_a)) ** 2))
    if not (np.isfinite(exponent) and np.isfinite(log_a)):
        raise MultiManifoldError(
            "Growth-law fit diverged", "gmst-fit-failed", {"point": point_id, "trace": trace}
        )

    if averaging == "joint":
        d_est, clamped = _dimension_from_exponent(float(exponent), gamma, ambient, table)
    else:
        slopes = np.diff(y) / np.diff(x)
        estimates = [_dimension_from_exponent(float(slope), gamma, ambient, table) for slope in slopes]
        d_est = float(np.mean([d for d, _ in estimates]))
        clamped = any(flag for _, flag in estimates)
    return float(np.exp(log_a)), d_est, clamped, residual


def gmst_local_dimension(
    cloud: PointCloud,
    p: int,
    n_range: Sequence[int],
    k: int = 5,
    gamma: float = 1.0,
    averaging: str = "joint",
    sampling: str = "subsample",
    resamples: int = 5,
    normalize_scale: bool = True,
    calibrate: bool = True,
    seed: int = 0,
    index: Optional[NeighborhoodIndex] = None,
) -> GmstFit:
    """Estimate the intrinsic dimension at ``p`` from the edge-length growth over n_range."""
    n_values = np.asarray(sorted(set(int(n) for n in n_range)), dtype=np.int64)
    if n_values.size < 2:
        raise MultiManifoldError(
            "Growth-law fit needs at least two neighborhood sizes", "gmst-fit-failed",
            {"point": p, "trace": [int(n) for n in n_values]},
        )
    if n_values[0] <= k:
        raise MultiManifoldError(
            f"Neighborhood size {n_values[0]} must exceed k = {k}", "k-exceeds-neighborhood", {"point": p}
        )
    index = index or NeighborhoodIndex(cloud)
    rng = np.random.default_rng([seed, p])
    lengths = _growth_curve(cloud, p, n_values, k, gamma, sampling, resamples, normalize_scale, rng, index)

    table = None
    # the uniform-ball table is measured on unit-radius domains
    if calibrate and (sampling == "subsample" or normalize_scale):
        table = calibration_table(cloud.dim, tuple(int(n) for n in n_values), k, float(gamma), sampling, resamples, seed)
    a, d_est, clamped, residual = _fit_growth_law(n_values, lengths, gamma, cloud.dim, averaging, p, table)
    if clamped:
        logger.debug("GMST estimate at point %d clamped to %.3f", p, d_est)
    return GmstFit(
        point_id=p,
        n_values=[int(n) for n in n_values],
        edge_lengths=[float(length) for length in lengths],
        a=a,
        d_est=d_est,
        d_rounded=int(np.floor(d_est + 0.5)),
        clamped=clamped,
        residual=residual,
    )


def compute_all_gmst(
    cloud: PointCloud,
    params: GmstParams,
    probe_ids: Optional[Sequence[int]] = None,
    max_workers: Optional[int] = None,
) -> List[GmstFit]:
    """GMST fits for ``probe_ids`` (all points by default), in probe order."""
    cloud.require_non_empty()
    if max(params.n_range) > len(cloud):
        raise MultiManifoldError(
            f"Largest neighborhood size {max(params.n_range)} exceeds cloud size {len(cloud)}", "k-exceeds-cloud"
        )
    probes = list(range(len(cloud))) if probe_ids is None else [int(p) for p in probe_ids]
    if params.calibrate and len(set(params.n_range)) >= 2:
        # fill the cache once before the workers start
        calibration_table(
            cloud.dim, tuple(sorted(set(params.n_range))), params.k, float(params.gamma),
            params.sampling, params.resamples, params.seed,
        )
    index = NeighborhoodIndex(cloud)
    fits = parallel_map(
        lambda p: gmst_local_dimension(
            cloud, p, params.n_range, params.k, params.gamma, params.averaging, params.sampling,
            params.resamples, params.normalize_scale, params.calibrate, params.seed, index,
        ),
        probes,
        max_workers,
    )
    clamped = sum(1 for fit in fits if fit.clamped)
    if clamped:
        logger.warning(
            "%d of %d GMST estimates fell outside the fitted range and were clamped to [1, %d]",
            clamped, len(fits), cloud.dim,
        )
    return fits
