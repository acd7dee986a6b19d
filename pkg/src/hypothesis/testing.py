"""
Hypothesis Testing Module for the multi-manifold toolkit.
Train/test resampling builds the empirical distribution H(i) of the SQD
statistic per stratum; candidate strata are accepted or rejected against it.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core import MultiManifoldError, PointCloud, as_points
from ..idim import IdParams, LocalIdRecord, Strata, compute_all_ids, stratify
from ..multimanifold import BuildParams, MultiManifold, build_multimanifold
from ..utils.helpers import parallel_map
from .sqd import SqdReport, sqd_total

logger = logging.getLogger(__name__)

EQUALITY_TOL = 1e-12

Verdict = Literal["accept", "reject", "reject-no-matching-stratum"]


class TestConfig(BaseModel):
    """Resampling and decision settings."""

    __test__ = False
    model_config = ConfigDict(frozen=True)

    runs: int = Field(default=20, ge=1, description="Train/test resampling runs per stratum")
    test_fraction: float = Field(default=1.0 / 3.0, gt=0.0, lt=1.0, description="Share of a stratum held out")
    delta: float = Field(default=0.05, gt=0.0, lt=1.0, description="Significance level")
    seed: int = Field(default=0, description="Base seed; run r draws with seed + r")
    build: BuildParams = Field(default_factory=BuildParams, description="Multi-manifold construction")
    t: float = Field(default=0.95, gt=0.0, le=1.0, description="Variance threshold of the SQD bound")
    one_sided: bool = Field(default=False, description="Reject only in the upper tail")
    support_floor: float = Field(default=0.5, ge=0.0, le=1.0, description="Warn below this support fraction")
    candidate_fraction: float = Field(default=1.0, gt=0.0, le=1.0, description="Share of the candidate sampled")


@dataclass(frozen=True)
class TestDistribution:
    """Empirical distribution H(i) of the per-run mean SQD bound."""

    __test__ = False

    stratum_dim: int
    runs: int
    samples: List[float]
    mean: float
    sd: float
    z_cutoff: float
    train_count: float
    test_count: float
    support_fraction: float
    delta: float
    seed: int
    exact_samples: List[float] = field(default_factory=list)
    component_counts: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class Decision:
    """Accept/reject verdict for one candidate stratum."""

    stratum_dim: int
    # None when the data has no stratum of this dimension
    statistic: Optional[float]
    interval: Optional[Tuple[float, float]]
    verdict: Verdict
    support_fraction: float = 1.0
    warnings: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class _RunOutcome:
    mean_bound: float
    total_exact: float
    train_count: int
    test_count: int
    support_fraction: float
    components: int


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def resample_distribution(
    stratum_points, i: int, config: TestConfig, max_workers: Optional[int] = None
) -> TestDistribution:
    """Build H(i): hold out a random test subset, fit on the rest, record mean_bound; repeat."""
    points = as_points(stratum_points)
    n = points.shape[0]
    test_size = _round_half_up(config.test_fraction * n)
    train_size = n - test_size
    min_leaf = config.build.min_leaf_for(i)
    if test_size < 1 or train_size < min_leaf:
        raise MultiManifoldError(
            f"Stratum of {n} points leaves {train_size} training points, below the {min_leaf} needed",
            "stratum-too-small",
            {"stratum": i},
        )

    def one_run(run: int) -> _RunOutcome:
        rng = np.random.default_rng(config.seed + run)
        test_rows = np.sort(rng.choice(n, size=test_size, replace=False))
        train_mask = np.ones(n, dtype=bool)
        train_mask[test_rows] = False
        manifold = build_multimanifold(points[train_mask], i, config.build)
        report = sqd_total(points[test_rows], manifold, config.t)
        return _RunOutcome(
            mean_bound=report.mean_bound,
            total_exact=report.total_exact,
            train_count=train_size,
            test_count=test_size,
            support_fraction=report.support_fraction,
            components=len(manifold.components),
        )

    outcomes = parallel_map(one_run, range(config.runs), max_workers)
    samples = [outcome.mean_bound for outcome in outcomes]
    values = np.asarray(samples, dtype=np.float64)
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    quantile = float(np.quantile(values, 1.0 - config.delta))
    z_cutoff = (quantile - mean) / sd if sd > 0.0 else 0.0

    logger.info("H(%d): %d runs, mean %.6g, sd %.6g, z cutoff %.4f", i, config.runs, mean, sd, z_cutoff)
    return TestDistribution(
        stratum_dim=i,
        runs=config.runs,
        samples=samples,
        mean=mean,
        sd=sd,
        z_cutoff=float(z_cutoff),
        train_count=float(np.mean([o.train_count for o in outcomes])),
        test_count=float(np.mean([o.test_count for o in outcomes])),
        support_fraction=float(np.mean([o.support_fraction for o in outcomes])),
        delta=config.delta,
        seed=config.seed,
        exact_samples=[o.total_exact for o in outcomes],
        component_counts=[o.components for o in outcomes],
    )


def decide(
    candidate_stat: Optional[float],
    dist: Optional[TestDistribution],
    delta: float = 0.05,
    one_sided: bool = False,
    stratum_dim: Optional[int] = None,
    support_fraction: float = 1.0,
    support_floor: float = 0.5,
) -> Decision:
    """Compare a candidate statistic with the empirical acceptance interval of ``dist``."""
    if dist is None:
        if stratum_dim is None:
            raise MultiManifoldError("A decision without a distribution needs the stratum dimension", "bad-decision")
        return Decision(stratum_dim, None, None, "reject-no-matching-stratum", support_fraction)
    if candidate_stat is None:
        raise MultiManifoldError("A decision against a distribution needs a statistic", "bad-decision")
    if dist.runs < 2 or len(dist.samples) < 2:
        raise MultiManifoldError(
            f"Decision needs at least 2 resampling runs, got {dist.runs}", "insufficient-runs",
            {"stratum": dist.stratum_dim},
        )

    samples = np.asarray(dist.samples, dtype=np.float64)
    if one_sided:
        lower = min(0.0, float(np.min(samples)))
        upper = float(np.quantile(samples, 1.0 - delta))
    else:
        lower = float(np.quantile(samples, delta / 2.0))
        upper = float(np.quantile(samples, 1.0 - delta / 2.0))

    warnings: List[str] = []
    inside = lower - EQUALITY_TOL <= candidate_stat <= upper + EQUALITY_TOL
    if support_fraction <= 0.0:
        warnings.append("no-supported-points")
        inside = False
    elif support_fraction < support_floor:
        warnings.append(f"low-support:{support_fraction:.3f}")
    verdict: Verdict = "accept" if inside else "reject"
    return Decision(
        stratum_dim=dist.stratum_dim if stratum_dim is None else stratum_dim,
        statistic=float(candidate_stat),
        interval=(lower, upper),
        verdict=verdict,
        support_fraction=float(support_fraction),
        warnings=warnings,
    )


@dataclass
class FullTestResult:
    """Everything the end-to-end test produced, for reporting."""

    data_records: List[LocalIdRecord]
    data_strata: Strata
    manifolds: Dict[int, MultiManifold]
    distributions: Dict[int, TestDistribution]
    candidate_strata: Strata
    reports: Dict[int, SqdReport]
    decisions: List[Decision]


def build_params_for(build: BuildParams, strata: Strata) -> BuildParams:
    """Fill K with the largest observed dimension unless it was set explicitly."""
    if build.K is not None or not strata.dims:
        return build
    return build.model_copy(update={"K": max(max(strata.dims), 1)})


def run_full_test(
    data: PointCloud,
    candidate: PointCloud,
    id_params: IdParams,
    config: TestConfig,
    max_workers: Optional[int] = None,
) -> FullTestResult:
    """Stratify the data, build H(i) per stratum, then test every candidate stratum."""
    data.require_non_empty()
    candidate.require_non_empty()
    if data.dim != candidate.dim:
        raise MultiManifoldError(
            f"Data lives in R^{data.dim}, candidate in R^{candidate.dim}", "ambient-mismatch"
        )

    data_records = compute_all_ids(data, id_params, max_workers)
    data_strata = stratify(data_records)
    config = config.model_copy(update={"build": build_params_for(config.build, data_strata)})

    manifolds: Dict[int, MultiManifold] = {}
    distributions: Dict[int, TestDistribution] = {}
    for i in data_strata.dims:
        ids = data_strata.groups[i]
        try:
            distributions[i] = resample_distribution(data.subset(ids), i, config, max_workers)
            manifolds[i] = build_multimanifold(data.subset(ids), i, config.build, ids=ids)
        except MultiManifoldError as error:
            raise error.with_context(stratum=i) from error

    sample = candidate
    if config.candidate_fraction < 1.0:
        rng = np.random.default_rng(config.seed)
        size = max(1, _round_half_up(config.candidate_fraction * len(candidate)))
        sample = PointCloud(candidate.subset(np.sort(rng.choice(len(candidate), size=size, replace=False))))
    candidate_strata = stratify(compute_all_ids(sample, id_params, max_workers))

    reports: Dict[int, SqdReport] = {}
    decisions: List[Decision] = []
    for j in candidate_strata.dims:
        if j not in distributions:
            logger.info("Candidate stratum %d has no counterpart in the data", j)
            decisions.append(decide(None, None, config.delta, stratum_dim=j, support_fraction=0.0))
            continue
        try:
            report = sqd_total(sample.subset(candidate_strata.groups[j]), manifolds[j], config.t)
            reports[j] = report
            decisions.append(
                decide(
                    report.mean_bound,
                    distributions[j],
                    config.delta,
                    one_sided=config.one_sided,
                    stratum_dim=j,
                    support_fraction=report.support_fraction,
                    support_floor=config.support_floor,
                )
            )
        except MultiManifoldError as error:
            raise error.with_context(stratum=j) from error
        logger.info("Candidate stratum %d: %s", j, decisions[-1].verdict)

    return FullTestResult(
        data_records=data_records,
        data_strata=data_strata,
        manifolds=manifolds,
        distributions=distributions,
        candidate_strata=candidate_strata,
        reports=reports,
        decisions=decisions,
    )


def full_test(
    data: PointCloud,
    candidate: PointCloud,
    id_params: IdParams,
    config: TestConfig,
    max_workers: Optional[int] = None,
) -> List[Decision]:
    """One Decision per candidate stratum."""
    return run_full_test(data, candidate, id_params, config, max_workers).decisions
