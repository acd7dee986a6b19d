"""
Sum-of-squared-distances statistics for the multi-manifold toolkit.
Singular-value bounds per linear component, totalled over a multi-manifold.
"""
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from ..core import as_points, centered_singular_values
from ..multimanifold import MultiManifold

logger = logging.getLogger(__name__)


class ComponentSqd(NamedTuple):
    component_id: int
    supported: int
    sqd_bound: float
    sqd_exact: float


@dataclass(frozen=True)
class SqdReport:
    """SQD of a test set against a multi-manifold, component by component."""

    per_component: List[ComponentSqd]
    total_bound: float
    total_exact: float
    supported: int
    unsupported: int

    @property
    def test_count(self) -> int:
        return self.supported + self.unsupported

    @property
    def mean_bound(self) -> float:
        """total_bound per supported test point (0 when nothing is supported)."""
        return self.total_bound / self.supported if self.supported else 0.0

    @property
    def support_fraction(self) -> float:
        return self.supported / self.test_count if self.test_count else 0.0


def sqd_component(test_members, t: float, d: int) -> Tuple[float, float]:
    """(sqd_bound, sqd_exact): (1 - t) * sum sigma^2, and the tail sum beyond d."""
    squared = centered_singular_values(as_points(test_members)) ** 2
    bound = (1.0 - t) * float(np.sum(squared))
    exact = float(np.sum(squared[d:]))
    return max(bound, 0.0), exact


def sqd_total(test_set, mm: MultiManifold, t: Optional[float] = None) -> SqdReport:
    """Assign test points to leaf cubes and sum the per-component statistics."""
    t = mm.t if t is None else t
    points = as_points(test_set)
    assignment = mm.assign_points(points)

    per_component: List[ComponentSqd] = []
    for component in mm.components:
        rows = np.flatnonzero(assignment == component.component_id)
        if rows.size == 0:
            per_component.append(ComponentSqd(component.component_id, 0, 0.0, 0.0))
            continue
        bound, exact = sqd_component(points[rows], t, component.subspace.d)
        per_component.append(ComponentSqd(component.component_id, int(rows.size), bound, exact))

    supported = int(np.count_nonzero(assignment >= 0))
    report = SqdReport(
        per_component=per_component,
        total_bound=sum(entry.sqd_bound for entry in per_component),
        total_exact=sum(entry.sqd_exact for entry in per_component),
        supported=supported,
        unsupported=int(points.shape[0]) - supported,
    )
    logger.debug(
        "SQD stratum %d: bound %.6g over %d supported, %d unsupported",
        mm.stratum_dim, report.total_bound, report.supported, report.unsupported,
    )
    return report
