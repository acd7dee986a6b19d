"""
Dyadic Linear Multi-Manifold Module.
Recursive axis-cycling bisection of a stratum with a best-fit affine
subspace per leaf cube.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core import AffineSubspace, MultiManifoldError, SvdSummary, as_points, center_and_svd, subspace_from_summary
from ..idim import d_vid, dimension_from_sigma

logger = logging.getLogger(__name__)

ROOT_INFLATION = 1e-9
ROOT_SIDE_FLOOR = 1e-9


class BuildParams(BaseModel):
    """Construction settings of a dyadic linear multi-manifold."""

    model_config = ConfigDict(frozen=True)

    t: float = Field(default=0.95, gt=0.0, le=1.0, description="Variance threshold for leaf dimensions")
    min_leaf_points: Optional[int] = Field(
        default=None, ge=2, description="Smallest cube that still gets a component (None = K log K rule)"
    )
    max_depth: int = Field(default=12, ge=0, description="Resolution parameter: deepest cube level")
    K: Optional[int] = Field(default=None, ge=1, description="Maximum intrinsic dimension observed")

    def min_leaf_for(self, i: int) -> int:
        """Explicit min_leaf_points, else max(ceil(K ln K), 2 i + 2)."""
        if self.min_leaf_points is not None:
            return self.min_leaf_points
        k = self.K if self.K is not None else max(i, 1)
        return max(int(math.ceil(k * math.log(k))), 2 * i + 2)


@dataclass(frozen=True)
class DyadicCube:
    """Axis-aligned box of the dyadic tree; ``path`` records lower (0) / upper (1) choices."""

    lo: np.ndarray
    side: np.ndarray
    depth: int = 0
    path: str = ""

    @property
    def split_axis(self) -> int:
        return self.depth % self.lo.shape[0]

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.side

    @property
    def midpoint(self) -> float:
        axis = self.split_axis
        return float(self.lo[axis] + self.side[axis] * 0.5)

    def children(self) -> Tuple["DyadicCube", "DyadicCube"]:
        """Equal halves along the split axis; other axes unchanged."""
        axis = self.split_axis
        side = self.side.copy()
        side[axis] = side[axis] * 0.5
        upper_lo = self.lo.copy()
        upper_lo[axis] = self.midpoint
        lower = DyadicCube(self.lo.copy(), side, self.depth + 1, self.path + "0")
        upper = DyadicCube(upper_lo, side.copy(), self.depth + 1, self.path + "1")
        return lower, upper


@dataclass(frozen=True)
class LinearComponent:
    """A leaf cube with the affine subspace fitted to the stratum points inside it."""

    component_id: int
    cube: DyadicCube
    subspace: AffineSubspace
    member_ids: np.ndarray
    svd: SvdSummary

    @property
    def member_count(self) -> int:
        return int(self.member_ids.size)


@dataclass(frozen=True)
class MultiManifold:
    """Union of the linear components approximating one stratum."""

    stratum_dim: int
    root: DyadicCube
    components: List[LinearComponent]
    params: BuildParams
    dropped_count: int
    min_leaf_points: int
    _leaf_paths: Dict[str, int] = field(init=False, repr=False, compare=False)
    _prefixes: FrozenSet[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        leaves = {component.cube.path: component.component_id for component in self.components}
        prefixes = {path[:j] for path in leaves for j in range(len(path) + 1)}
        object.__setattr__(self, "_leaf_paths", leaves)
        object.__setattr__(self, "_prefixes", frozenset(prefixes))

    @property
    def t(self) -> float:
        return self.params.t

    @property
    def supported_count(self) -> int:
        return sum(component.member_count for component in self.components)

    def assign_points(self, points) -> np.ndarray:
        """Component id per point, -1 where no leaf cube contains it."""
        array = as_points(points)
        assignment = np.full(array.shape[0], -1, dtype=np.int64)
        if array.shape[0] == 0 or not self.components:
            return assignment
        # the root is closed on every face; inner splits send the midpoint upward
        inside = np.all((array >= self.root.lo) & (array <= self.root.hi), axis=1)
        stack = [(self.root, np.flatnonzero(inside))]
        while stack:
            cube, rows = stack.pop()
            if rows.size == 0 or cube.path not in self._prefixes:
                continue
            leaf = self._leaf_paths.get(cube.path)
            if leaf is not None:
                assignment[rows] = leaf
                continue
            lower, upper = cube.children()
            upper_mask = array[rows, cube.split_axis] >= cube.midpoint
            stack.append((upper, rows[upper_mask]))
            stack.append((lower, rows[~upper_mask]))
        return assignment


def root_cube(points) -> DyadicCube:
    """Cube with lo at the per-axis minimum and every side equal to the largest extent."""
    array = as_points(points)
    if array.shape[0] == 0:
        raise MultiManifoldError("Cannot bound an empty point set", "empty-set")
    lo = array.min(axis=0)
    extent = float(np.max(array.max(axis=0) - lo))
    if extent <= 0.0:
        side = ROOT_SIDE_FLOOR
        lo = lo - side * 0.5
    else:
        side = extent * (1.0 + ROOT_INFLATION)
    return DyadicCube(lo=lo, side=np.full(array.shape[1], side), depth=0, path="")


def split_cube(cube: DyadicCube, points_in_cube) -> Tuple[DyadicCube, DyadicCube, np.ndarray]:
    """Halve ``cube`` along depth mod D; returns (lower, upper, mask of points sent upward)."""
    array = as_points(points_in_cube)
    lower, upper = cube.children()
    upper_mask = array[:, cube.split_axis] >= cube.midpoint
    return lower, upper, upper_mask


def _fit_component(
    component_id: int, cube: DyadicCube, members: np.ndarray, member_ids: np.ndarray, i: int, t: float
) -> LinearComponent:
    summary = center_and_svd(members)
    d = min(dimension_from_sigma(summary.singular_values, t), i)
    return LinearComponent(
        component_id=component_id,
        cube=cube,
        subspace=subspace_from_summary(summary, d),
        member_ids=member_ids,
        svd=summary,
    )


def build_multimanifold(
    stratum_points,
    i: int,
    params: BuildParams,
    ids: Optional[Sequence[int]] = None,
) -> MultiManifold:
    """Top-down dyadic partition of one stratum into linear components.

    A cube becomes a leaf once its variance-based dimension is defined and at most
    ``i``, or at ``max_depth``; cubes with fewer than min_leaf_points members are
    dropped and their points counted in ``dropped_count``.
    """
    array = as_points(stratum_points)
    if array.shape[0] == 0:
        raise MultiManifoldError("Cannot build a multi-manifold for an empty stratum", "empty-stratum", {"stratum": i})
    member_ids = np.arange(array.shape[0]) if ids is None else np.asarray(ids, dtype=np.intp)
    min_leaf = params.min_leaf_for(i)

    root = root_cube(array)
    components: List[LinearComponent] = []
    dropped = 0
    stack = [(root, np.arange(array.shape[0]))]
    while stack:
        cube, rows = stack.pop()
        if rows.size < min_leaf:
            dropped += int(rows.size)
            continue
        members = array[rows]
        dim = d_vid(members, params.t, min_leaf)
        if (dim is not None and dim <= i) or cube.depth >= params.max_depth:
            components.append(_fit_component(len(components), cube, members, member_ids[rows], i, params.t))
            logger.debug("Leaf %r at depth %d with %d points", cube.path, cube.depth, rows.size)
            continue
        lower, upper, upper_mask = split_cube(cube, members)
        stack.append((upper, rows[upper_mask]))
        stack.append((lower, rows[~upper_mask]))

    if dropped:
        logger.warning("Stratum %d: %d points fell in cubes below %d points and were dropped", i, dropped, min_leaf)
    logger.info("Stratum %d: %d components over %d points", i, len(components), array.shape[0] - dropped)
    return MultiManifold(
        stratum_dim=i,
        root=root,
        components=components,
        params=params,
        dropped_count=dropped,
        min_leaf_points=min_leaf,
    )


def locate_leaf(mm: MultiManifold, x) -> Optional[int]:
    """Id of the component whose cube contains ``x``, or None for an unsupported point."""
    component_id = int(mm.assign_points(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
    return None if component_id < 0 else component_id
