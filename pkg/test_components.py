#!/usr/bin/env python3
"""
Component tests for the Multi-Manifold Hypothesis Toolkit.
Runs as a script (grouped ✓/✗ summary) or under pytest.
"""
import sys
import os
import tempfile
from pathlib import Path

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from src.core import (
    AffineSubspace,
    MultiManifoldError,
    PointCloud,
    best_fit_affine,
    center_and_svd,
    centered_singular_values,
    residual_sqd_exact,
    tail_variance,
    total_variance,
)
from src.neighborhoods import (
    NeighborhoodIndex,
    NeighborhoodSpec,
    ball_neighborhood,
    dyadic_radii,
    knn_ladder,
    knn_neighborhood,
    radius_ladder,
)
from src.idim import (
    GmstParams,
    IdParams,
    LocalIdRecord,
    compute_all_gmst,
    compute_all_ids,
    d_vid,
    diagnostic_encodings,
    dimension_agreement,
    dimension_from_sigma,
    gmst_edge_length,
    gmst_local_dimension,
    stratify,
)
from src.idim.gmst import calibration_table
from src.multimanifold import BuildParams, DyadicCube, build_multimanifold, locate_leaf, root_cube, split_cube
from src.hypothesis import TestConfig, TestDistribution, decide, full_test, resample_distribution, sqd_component, sqd_total
from src.ingestion import SphereLineSpec, gen_linear_patch, gen_sphere_line, load_cloud
from src.storage import (
    cloud_frame,
    decisions_from_document,
    decisions_to_document,
    distribution_from_document,
    distribution_to_document,
    export_labeled,
    manifold_from_document,
    manifold_to_document,
    render_json,
    write_artifacts,
)
from src.utils import format_table, parallel_map, parse_flat_spec, parse_range


def _error_code(func, *args, **kwargs):
    """Code of the MultiManifoldError raised by ``func``, or None."""
    try:
        func(*args, **kwargs)
    except MultiManifoldError as e:
        return e.code
    return None


def _rejects(func) -> bool:
    try:
        func()
    except ValidationError:
        return True
    return False


def _circle(n: int = 400) -> np.ndarray:
    angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _distribution(samples, stratum_dim: int = 1) -> TestDistribution:
    values = np.asarray(samples, dtype=float)
    return TestDistribution(
        stratum_dim=stratum_dim,
        runs=len(samples),
        samples=list(map(float, samples)),
        mean=float(values.mean()),
        sd=float(values.std(ddof=1)) if len(samples) > 1 else 0.0,
        z_cutoff=0.0,
        train_count=200.0,
        test_count=100.0,
        support_fraction=1.0,
        delta=0.1,
        seed=0,
    )


# --- core -------------------------------------------------------------------------

def test_point_cloud_rejects_non_finite():
    assert _error_code(PointCloud, [[0.0, 1.0], [np.nan, 2.0]]) == "non-finite"
    assert _error_code(PointCloud, [[0.0, 1.0], [np.inf, 2.0]]) == "non-finite"


def test_point_cloud_is_read_only():
    cloud = PointCloud([[0.0, 1.0], [2.0, 3.0]])
    assert cloud.dim == 2 and len(cloud) == 2
    assert cloud.diameter() == 2.0
    try:
        cloud.points[0, 0] = 5.0
    except ValueError:
        pass
    else:
        raise AssertionError("point coordinates should be read-only")


def test_svd_summary_ordering():
    rng = np.random.default_rng(1)
    summary = center_and_svd(rng.normal(size=(30, 4)) * [3.0, 2.0, 1.0, 0.5])
    assert summary.count == 30
    assert np.all(np.diff(summary.singular_values) <= 0)
    assert abs(total_variance(summary) - float(np.sum(summary.singular_values ** 2))) < 1e-12


def test_best_fit_residual_matches_singular_tail():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(5, 60))
        D = int(rng.integers(2, 7))
        d = int(rng.integers(0, D + 1))
        points = rng.normal(size=(n, D)) * rng.uniform(0.1, 3.0, size=D)
        summary = center_and_svd(points)
        exact = residual_sqd_exact(points, best_fit_affine(points, d))
        assert abs(exact - tail_variance(summary, d)) <= 1e-9 * total_variance(summary)


def test_best_fit_rejects_dimension_above_ambient():
    assert _error_code(best_fit_affine, np.ones((4, 2)), 3) == "dimension-exceeds-ambient"


def test_affine_subspace_requires_orthonormal_basis():
    assert _error_code(AffineSubspace, np.zeros(3), np.array([[1.0, 1.0, 0.0]])) == "non-orthonormal"


def test_residual_invariant_under_rigid_motion():
    rng = np.random.default_rng(3)
    points = rng.normal(size=(40, 3))
    subspace = best_fit_affine(points, 1)
    rotation, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = np.array([5.0, -2.0, 1.0])
    moved = PointCloud(points).transformed(rotation, shift)
    before = residual_sqd_exact(points, subspace)
    after = residual_sqd_exact(moved, subspace.transported(rotation, shift))
    assert abs(before - after) <= 1e-9 * max(before, 1.0)


def test_svd_invariant_under_permutation():
    rng = np.random.default_rng(31)
    points = rng.normal(size=(60, 4)) * [3.0, 1.0, 0.5, 0.1]
    shuffled = points[rng.permutation(60)]
    a, b = center_and_svd(points), center_and_svd(shuffled)
    assert np.allclose(a.mean, b.mean, rtol=0.0, atol=1e-12)
    assert np.allclose(a.singular_values, b.singular_values, rtol=1e-9, atol=0.0)


def test_svd_under_uniform_scaling():
    points = np.random.default_rng(32).normal(size=(40, 3))
    summary = center_and_svd(points)
    for s in (0.01, 2.5, 1000.0):
        scaled = center_and_svd(points * s)
        assert np.allclose(scaled.singular_values, s * summary.singular_values, rtol=1e-9, atol=0.0)
        assert abs(total_variance(scaled) - s * s * total_variance(summary)) <= 1e-9 * s * s * total_variance(summary)


def test_error_context_rendering():
    error = MultiManifoldError("Stratum too small", "stratum-too-small").with_context(stratum=3, trace=[1])
    assert isinstance(error, ValueError)
    assert error.code == "stratum-too-small"
    assert str(error) == "Stratum too small (stratum=3)"


# --- neighborhoods ----------------------------------------------------------------

def test_index_matches_brute_force_scan():
    rng = np.random.default_rng(11)
    # coarse rounding produces exact distance ties
    cloud = PointCloud(np.round(rng.uniform(size=(300, 3)), 2))
    index = NeighborhoodIndex(cloud)
    radii = [0.3, 0.2, 0.1]
    for center in range(0, 300, 7):
        for radius, members in zip(radii, index.balls(center, radii)):
            assert np.array_equal(members, ball_neighborhood(cloud, center, radius))
        for k, members in zip([1, 5, 40], index.knn_sets(center, [1, 5, 40])):
            assert np.array_equal(members, knn_neighborhood(cloud, center, k))


def test_knn_tie_breaking():
    cloud = PointCloud([[0.0], [1.0], [-1.0], [0.0]])
    assert knn_neighborhood(cloud, 0, 2).tolist() == [0, 3]
    assert knn_neighborhood(cloud, 0, 3).tolist() == [0, 3, 1]
    assert knn_neighborhood(cloud, 3, 4).tolist() == [3, 0, 1, 2]
    assert NeighborhoodIndex(cloud).knn(3, 4).tolist() == [3, 0, 1, 2]


def test_ball_is_closed():
    cloud = PointCloud([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    assert ball_neighborhood(cloud, 0, 1.0).tolist() == [0, 1]
    assert NeighborhoodIndex(cloud).ball(0, 1.0).tolist() == [0, 1]


def test_balls_are_nested():
    rng = np.random.default_rng(33)
    cloud = PointCloud(np.round(rng.uniform(size=(300, 2)), 2))
    radii = [0.05, 0.1, 0.1, 0.25, 0.5]
    for center in (0, 17, 299):
        members = [set(ball_neighborhood(cloud, center, r).tolist()) for r in radii]
        assert all(inner <= outer for inner, outer in zip(members, members[1:]))
        assert all(center in ball for ball in members)


def test_knn_rejects_k_above_cloud_size():
    cloud = PointCloud([[0.0], [1.0]])
    assert _error_code(knn_neighborhood, cloud, 0, 3) == "k-exceeds-cloud"
    assert _error_code(NeighborhoodIndex(cloud).knn, 0, 3) == "k-exceeds-cloud"


def test_dyadic_and_arithmetic_ladders():
    cloud = PointCloud([[0.0, 0.0], [2.0, 1.0]])
    assert dyadic_radii(cloud, 1, 3) == [1.0, 0.5, 0.25]
    assert _error_code(dyadic_radii, PointCloud([[1.0, 1.0]]), 1, 2) == "degenerate-diameter"
    ladder = radius_ladder(2.0, 0.1, 0.1)
    assert len(ladder) == 20 and ladder[0] == 2.0 and ladder[-1] == 0.1
    counts = knn_ladder(50, 700, 25)
    assert len(counts) == 27 and counts[-1] == 700


def test_neighborhood_spec_validation():
    spec = NeighborhoodSpec.knn([5, 10, 20])
    assert spec.values == (5, 10, 20) and len(spec) == 3
    assert _rejects(lambda: NeighborhoodSpec.ball([0.1, 0.2]))
    assert _rejects(lambda: NeighborhoodSpec.ball([1.0, -0.5]))
    assert _rejects(lambda: NeighborhoodSpec.knn([10, 5]))


# --- intrinsic dimension ----------------------------------------------------------

def test_dimension_from_sigma_threshold():
    sigma = np.array([4.0, 3.0])
    assert dimension_from_sigma(sigma, 0.5) == 1
    assert dimension_from_sigma(np.array([1.0, 1.0]), 0.5) == 1
    assert dimension_from_sigma(sigma, 0.7) == 2
    assert dimension_from_sigma(np.zeros(3), 0.9) == 0


def test_d_vid_cutoff_and_collinear_points():
    points = np.outer(np.arange(12.0), [1.0, 2.0, -1.0])
    assert d_vid(points, 0.95, 10) == 1
    assert d_vid(points[:10], 0.95, 10) is None
    assert d_vid(np.ones((20, 3)), 0.95, 10) == 0
    assert _error_code(d_vid, points, 1.5, 10) == "bad-threshold"


def test_d_vid_monotone_in_threshold():
    rng = np.random.default_rng(34)
    thresholds = [0.5, 0.7, 0.9, 0.95, 0.99, 1.0]
    for _ in range(50):
        points = rng.normal(size=(30, 5)) * rng.uniform(0.01, 2.0, size=5)
        dims = [d_vid(points, t, 10) for t in thresholds]
        assert dims == sorted(dims)
        assert d_vid(points, 0.9, 29) is not None and d_vid(points, 0.9, 30) is None


def test_raising_cutoff_only_removes_scales():
    cloud = gen_sphere_line(SphereLineSpec(n_sphere=400, n_line=60, seed=4))
    spec = NeighborhoodSpec.ball([0.1, 0.2, 0.3])
    low = compute_all_ids(cloud, IdParams(c=5, spec=spec), max_workers=1)
    high = compute_all_ids(cloud, IdParams(c=20, spec=spec), max_workers=1)
    assert sum(r.defined for r in low) >= sum(r.defined for r in high) > 0
    for a, b in zip(low, high):
        assert not b.defined or a.defined
        for (_, dim_low), (_, dim_high) in zip(a.per_scale_dims, b.per_scale_dims):
            assert dim_high is None or dim_high == dim_low
    none = compute_all_ids(cloud, IdParams(c=len(cloud), spec=spec), max_workers=1)
    assert all(not record.defined for record in none)


def test_local_dimension_on_plane():
    cloud = gen_linear_patch(400, 2, 5, seed=3)
    params = IdParams(t=0.95, c=10, spec=NeighborhoodSpec.knn([20, 40, 80]))
    records = compute_all_ids(cloud, params, max_workers=2)
    assert all(record.dimension == 2 for record in records)
    scanned = compute_all_ids(cloud, params, max_workers=1, accelerate=False)
    assert [r.dimension for r in scanned] == [r.dimension for r in records]

    # energy is the mean total variance over the defined scales
    record = records[17]
    totals = [
        float(np.sum(centered_singular_values(cloud.points[knn_neighborhood(cloud, 17, k)]) ** 2))
        for k in (20, 40, 80)
    ]
    assert abs(record.energy - np.mean(totals)) <= 1e-12 * max(totals)


def test_undefined_points():
    cloud = gen_linear_patch(60, 2, 3, seed=1)
    params = IdParams(t=0.95, c=100, spec=NeighborhoodSpec.knn([20, 40]))
    records = compute_all_ids(cloud, params, max_workers=1)
    assert all(record.dimension is None and not record.defined for record in records)
    strata = stratify(records)
    assert strata.dims == [] and strata.unclassified.size == 60
    assert np.all(strata.labels(60) == -1)


def test_stratify_and_encodings():
    records = [
        LocalIdRecord(0, 1, [(20, 1)], 0, 0.5),
        LocalIdRecord(1, 2, [(20, 3), (40, 2), (80, 2)], 1, 1.5),
        LocalIdRecord(2, None, [(20, None)], None, 0.0),
        LocalIdRecord(3, 2, [(20, 2)], 0, 2.0),
    ]
    strata = stratify(records)
    assert strata.counts() == {1: 1, 2: 2}
    assert strata.unclassified.tolist() == [2]
    assert strata.labels(4).tolist() == [1, 2, -1, 2]
    codes = diagnostic_encodings(records, NeighborhoodSpec.knn([20, 40, 80]))
    assert codes[1] == (5, 1.5)
    assert codes[2] == (-1, 0.0)


def test_point_mass_code_differs_from_undefined():
    records = [
        LocalIdRecord(0, 0, [(20, None), (40, 0)], 1, 0.0),
        LocalIdRecord(1, 0, [(20, 0), (40, 0)], 0, 0.0),
        LocalIdRecord(2, None, [(20, None), (40, None)], None, 0.0),
        LocalIdRecord(3, 1, [(20, 2), (40, 1)], 1, 0.5),
    ]
    codes = [code for code, _ in diagnostic_encodings(records, NeighborhoodSpec.knn([20, 40]))]
    assert codes == [0, 0, -1, 1]


def test_ball_and_knn_agree_on_a_line():
    cloud = gen_linear_patch(300, 1, 3, seed=2)
    by_ball = compute_all_ids(cloud, IdParams(spec=NeighborhoodSpec.ball([0.2, 0.1])), max_workers=1)
    by_knn = compute_all_ids(cloud, IdParams(spec=NeighborhoodSpec.knn([20, 40])), max_workers=1)
    assert dimension_agreement(by_ball, by_knn) == 1.0


def test_gmst_edge_length():
    cloud = PointCloud([[0.0], [1.0], [3.0]])
    assert abs(gmst_edge_length(cloud, [0, 1, 2], 1, 1.0) - 4.0) < 1e-12
    assert abs(gmst_edge_length(cloud, [0, 1, 2], 1, 2.0) - 6.0) < 1e-12
    assert _error_code(gmst_edge_length, cloud, [0, 1, 2], 3, 1.0) == "k-exceeds-neighborhood"


def test_gmst_recovers_a_line():
    cloud = gen_linear_patch(2000, 1, 3, seed=5)
    fits = compute_all_gmst(cloud, GmstParams(), probe_ids=range(0, 2000, 100), max_workers=2)
    assert len(fits) == 20
    assert sum(1 for fit in fits if fit.d_rounded == 1) >= 19
    pairwise = compute_all_gmst(cloud, GmstParams(averaging="pairwise"), probe_ids=range(0, 2000, 200))
    assert np.mean([fit.d_est for fit in pairwise]) < 2.0


def test_gmst_edge_length_under_scaling():
    cloud = PointCloud(np.random.default_rng(36).normal(size=(80, 3)))
    members = list(range(0, 80, 2))
    for gamma in (1.0, 1.5):
        base = gmst_edge_length(cloud, members, 4, gamma)
        for s in (0.1, 7.0):
            scaled = gmst_edge_length(PointCloud(cloud.points * s), members, 4, gamma)
            assert abs(scaled - s ** gamma * base) <= 1e-9 * s ** gamma * base


def test_gmst_calibration_table():
    n_values = tuple(range(60, 121, 20))
    exponents, dims = calibration_table(3, n_values, 5, 1.0, "subsample", 2, 0)
    assert dims == (1.0, 2.0, 3.0)
    assert list(exponents) == sorted(exponents) and len(set(exponents)) == 3
    assert abs(exponents[0]) < 0.15 and 0.25 < exponents[1] < 0.65
    assert calibration_table(3, n_values, 5, 1.0, "subsample", 2, 0) == (exponents, dims)


def test_gmst_sampling_variants_on_a_plane():
    cloud = gen_linear_patch(1500, 2, 3, seed=37)
    centers = range(0, 1500, 150)
    sizes = tuple(range(100, 201, 25))
    for sampling in ("subsample", "nested"):
        fits = compute_all_gmst(cloud, GmstParams(n_range=sizes, sampling=sampling), probe_ids=centers, max_workers=2)
        assert abs(np.mean([fit.d_est for fit in fits]) - 2.0) <= 0.5, sampling
    first = gmst_local_dimension(cloud, 3, sizes, seed=9)
    assert gmst_local_dimension(cloud, 3, sizes, seed=9) == first
    raw = gmst_local_dimension(cloud, 3, sizes, calibrate=False)
    assert 1.0 <= raw.d_est <= 3.0


def test_gmst_fit_needs_two_sizes():
    cloud = gen_linear_patch(300, 1, 3, seed=5)
    assert _error_code(gmst_local_dimension, cloud, 0, [200, 200]) == "gmst-fit-failed"
    assert _rejects(lambda: GmstParams(n_range=(3,), k=5))


# --- multi-manifolds --------------------------------------------------------------

def test_min_leaf_rule():
    assert BuildParams(K=3).min_leaf_for(2) == 6
    assert BuildParams(K=10).min_leaf_for(1) == 24
    assert BuildParams().min_leaf_for(1) == 4
    assert BuildParams(min_leaf_points=9).min_leaf_for(3) == 9


def test_root_cube_and_split():
    rng = np.random.default_rng(2)
    points = rng.uniform(size=(50, 3)) * [1.0, 2.0, 3.0]
    root = root_cube(points)
    assert np.all(root.side == root.side[0]) and root.side[0] >= np.ptp(points, axis=0).max()
    assert np.all(points >= root.lo) and np.all(points <= root.hi)

    cube = DyadicCube(np.zeros(2), np.full(2, 2.0))
    lower, upper, mask = split_cube(cube, [[1.0, 0.5], [0.5, 1.5]])
    assert mask.tolist() == [True, False]
    assert lower.hi[0] == 1.0 and upper.lo[0] == 1.0
    assert (lower.path, upper.path) == ("0", "1")
    assert lower.split_axis == 1 and lower.children()[0].split_axis == 0


def test_exact_plane_gives_one_component():
    cloud = gen_linear_patch(300, 2, 4, seed=6)
    mm = build_multimanifold(cloud.points, 2, BuildParams())
    assert len(mm.components) == 1 and mm.dropped_count == 0
    assert mm.components[0].subspace.d == 2
    assert sqd_total(cloud.points, mm).total_exact <= 1e-18


def test_circle_partition_invariants():
    points = _circle()
    mm = build_multimanifold(points, 1, BuildParams())
    assert len(mm.components) >= 2
    assert all(component.subspace.d == 1 for component in mm.components)
    assert mm.supported_count + mm.dropped_count == len(points)

    members = np.concatenate([component.member_ids for component in mm.components])
    assert np.unique(members).size == members.size
    assignment = mm.assign_points(points)
    for component in mm.components:
        assert np.all(assignment[component.member_ids] == component.component_id)
        if component.cube.depth < mm.params.max_depth:
            assert d_vid(points[component.member_ids], mm.t, mm.min_leaf_points) <= 1
    assert mm.assign_points([[100.0, 100.0]]).tolist() == [-1]
    assert locate_leaf(mm, [100.0, 100.0]) is None
    assert locate_leaf(mm, points[mm.components[0].member_ids[0]]) == 0


def test_points_in_dropped_cubes_have_no_leaf():
    line = np.column_stack([np.linspace(0.0, 1.0, 50), np.zeros(50)])
    stray = np.array([[0.9, 1.0], [0.95, 0.98]])
    points = np.vstack([line, stray])
    mm = build_multimanifold(points, 1, BuildParams())
    assert mm.dropped_count == 2 and mm.supported_count == 50
    assert len(mm.components) == 2
    assert locate_leaf(mm, stray[0]) is None and locate_leaf(mm, stray[1]) is None
    assert np.all(mm.root.lo <= stray[0]) and np.all(stray[0] <= mm.root.hi)
    assert locate_leaf(mm, [0.25, 0.0]) is not None


def test_depth_zero_keeps_the_root():
    mm = build_multimanifold(_circle(), 1, BuildParams(max_depth=0))
    assert len(mm.components) == 1 and mm.components[0].cube.path == ""


def test_empty_stratum_is_an_error():
    assert _error_code(build_multimanifold, np.empty((0, 2)), 1, BuildParams()) == "empty-stratum"


# --- hypothesis testing -----------------------------------------------------------

def test_sqd_component_values():
    rectangle = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]]
    bound, exact = sqd_component(rectangle, 0.8, 1)
    assert abs(bound - 1.0) < 1e-12 and abs(exact - 1.0) < 1e-12
    assert sqd_component(rectangle, 0.8, 2)[1] < 1e-24


def test_sqd_bound_at_threshold_extremes():
    points = np.random.default_rng(38).normal(size=(25, 3))
    total = total_variance(center_and_svd(points))
    for d in (0, 1, 3):
        assert sqd_component(points, 1.0, d)[0] == 0.0
        assert abs(sqd_component(points, 0.0, d)[0] - total) <= 1e-12 * total


def test_sqd_total_accounting():
    points = _circle()
    mm = build_multimanifold(points, 1, BuildParams())
    test_set = np.vstack([points[::3], [[50.0, 50.0], [-50.0, 0.0]]])
    report = sqd_total(test_set, mm)
    assert len(report.per_component) == len(mm.components)
    assert report.total_bound == sum(entry.sqd_bound for entry in report.per_component)
    assert report.supported + report.unsupported == len(test_set)
    assert report.unsupported >= 2
    assert report.mean_bound >= 0.0

    far = sqd_total([[50.0, 50.0]], mm)
    assert far.supported == 0 and far.mean_bound == 0.0


def test_decide_interval():
    dist = _distribution([float(v) for v in range(1, 21)])
    accepted = decide(10.0, dist, delta=0.1)
    assert accepted.verdict == "accept"
    assert abs(accepted.interval[0] - 1.95) < 1e-12 and abs(accepted.interval[1] - 19.05) < 1e-12
    assert decide(0.5, dist, delta=0.1).verdict == "reject"
    assert decide(25.0, dist, delta=0.1).verdict == "reject"
    one_sided = decide(0.5, dist, delta=0.1, one_sided=True)
    assert one_sided.verdict == "accept" and one_sided.interval[0] == 0.0
    assert decide(18.5, dist, delta=0.1, one_sided=True).verdict == "reject"


def test_decide_edge_cases():
    dist = _distribution([1.0, 2.0, 3.0])
    unsupported = decide(0.0, dist, delta=0.1, support_fraction=0.0)
    assert unsupported.verdict == "reject" and "no-supported-points" in unsupported.warnings
    low = decide(2.0, dist, delta=0.1, support_fraction=0.3)
    assert low.verdict == "accept" and low.warnings[0].startswith("low-support")
    missing = decide(1.0, None, stratum_dim=4)
    assert missing.verdict == "reject-no-matching-stratum" and missing.interval is None
    assert missing.statistic is None
    assert _error_code(decide, None, dist) == "bad-decision"
    assert _error_code(decide, 1.0, _distribution([1.0])) == "insufficient-runs"


def test_resample_distribution_on_plane():
    points = gen_linear_patch(300, 2, 4, seed=4).points
    config = TestConfig(runs=6, seed=4)
    dist = resample_distribution(points, 2, config, max_workers=3)
    assert len(dist.samples) == 6 and dist.test_count == 100 and dist.train_count == 200
    assert abs(dist.mean - np.mean(dist.samples)) <= 1e-12
    assert abs(dist.sd - np.std(dist.samples, ddof=1)) <= 1e-12
    assert max(dist.exact_samples) <= 1e-18
    assert resample_distribution(points, 2, config, max_workers=1).samples == dist.samples


def test_resample_seeds_give_different_samples():
    points = gen_linear_patch(300, 2, 4, seed=4).points
    first = resample_distribution(points, 2, TestConfig(runs=4, seed=4), max_workers=1)
    again = resample_distribution(points, 2, TestConfig(runs=4, seed=4), max_workers=2)
    other = resample_distribution(points, 2, TestConfig(runs=4, seed=5), max_workers=1)
    assert first.samples == again.samples
    assert first.samples != other.samples
    # run r of seed 4 and run r - 1 of seed 5 draw with the same generator seed
    assert first.samples[1:] == other.samples[:-1]


def test_resample_rejects_tiny_strata():
    points = gen_linear_patch(6, 2, 3, seed=1).points
    assert _error_code(resample_distribution, points, 2, TestConfig()) == "stratum-too-small"


def test_full_test_verdicts():
    data = gen_linear_patch(300, 2, 3, seed=8)
    id_params = IdParams(spec=NeighborhoodSpec.knn([20, 40]))
    config = TestConfig(runs=20, seed=1)

    same = full_test(data, data, id_params, config, max_workers=2)
    assert [(d.stratum_dim, d.verdict) for d in same] == [(2, "accept")]

    far = data.transformed(np.eye(3), np.full(3, 10.0 * data.diameter()))
    moved = full_test(data, far, id_params, config, max_workers=2)
    assert all(decision.verdict == "reject" for decision in moved)

    sampled = full_test(data, data, id_params, config.model_copy(update={"candidate_fraction": 0.5}))
    assert len(sampled) >= 1

    assert _error_code(full_test, data, gen_linear_patch(50, 2, 4), id_params, config) == "ambient-mismatch"


# --- ingestion --------------------------------------------------------------------

def test_sphere_line_construction():
    spec = SphereLineSpec(seed=3)
    cloud = gen_sphere_line(spec)
    assert len(cloud) == spec.total == 2706
    sphere, line = cloud.points[:spec.n_sphere], cloud.points[spec.n_sphere:]
    assert np.all(np.abs(np.linalg.norm(sphere, axis=1) - 0.5) <= 1e-12)
    assert np.all((np.abs(line[:, 0]) >= 0.5) & (np.abs(line[:, 0]) <= 1.0))
    assert np.all(line[:, 1:] == 0.0)
    assert np.array_equal(gen_sphere_line(spec).points, cloud.points)

    only_line = gen_sphere_line(SphereLineSpec(n_sphere=0, n_line=50))
    assert len(only_line) == 50 and np.all(only_line.points[:, 1:] == 0.0)
    assert _rejects(lambda: SphereLineSpec(line_intervals=((-1.0, -0.2), (0.5, 1.0))))


def test_area_uniform_sphere_sampling():
    by_angle = gen_sphere_line(SphereLineSpec(n_sphere=5000, n_line=0, seed=6)).points
    by_area = gen_sphere_line(SphereLineSpec(n_sphere=5000, n_line=0, seed=6, area_uniform=True)).points
    assert np.all(np.abs(np.linalg.norm(by_area, axis=1) - 0.5) <= 1e-12)
    # a polar cap of angle pi/3 holds a quarter of the area and a third of the angle range
    assert abs(np.mean(by_area[:, 2] > 0.25) - 0.25) < 0.03
    assert abs(np.mean(by_angle[:, 2] > 0.25) - 1.0 / 3.0) < 0.03


def test_linear_patch_rank():
    cloud = gen_linear_patch(200, 3, 7, seed=9)
    sigma = centered_singular_values(cloud)
    assert cloud.dim == 7 and len(cloud) == 200
    assert sigma[2] > 0.1 and np.all(sigma[3:] <= 1e-10)


def test_load_xyz_and_csv():
    with tempfile.TemporaryDirectory() as tmp:
        xyz = Path(tmp) / "axes.xyz"
        xyz.write_text("1 0 0\n0 1 0\n0 0 1\n")
        cloud = load_cloud(xyz, "xyz")
        assert np.array_equal(cloud.points, np.eye(3))

        csv = Path(tmp) / "points.csv"
        csv.write_text("x,y,z,label\n1.5,2,3,a\n4,5,6,b\n")
        assert load_cloud(csv, "csv").points.tolist() == [[1.5, 2.0, 3.0], [4.0, 5.0, 6.0]]


def test_load_errors_carry_line_numbers():
    with tempfile.TemporaryDirectory() as tmp:
        bad = Path(tmp) / "nan.xyz"
        bad.write_text("1 0 0\nnan 1 0\n")
        try:
            load_cloud(bad, "xyz")
        except MultiManifoldError as e:
            assert e.code == "non-finite" and e.context["line"] == 2
        else:
            raise AssertionError("expected a non-finite error")

        garbage = Path(tmp) / "garbage.csv"
        garbage.write_text("x1,x2\n1,2\n3,abc\n")
        try:
            load_cloud(garbage, "csv")
        except MultiManifoldError as e:
            assert e.code == "parse-error" and e.context["line"] == 3
        else:
            raise AssertionError("expected a parse error")

        ragged = Path(tmp) / "ragged.xyz"
        ragged.write_text("1 0 0\n0 1 0 5\n")
        assert _error_code(load_cloud, ragged, "xyz") == "ragged-rows"
        assert _error_code(load_cloud, Path(tmp) / "missing.csv", "csv") == "missing-input"


# --- storage ----------------------------------------------------------------------

def test_labeled_export_round_trip():
    cloud = PointCloud(np.random.default_rng(5).normal(size=(20, 3)) / 3.0)
    records = [LocalIdRecord(p, 1 if p % 4 else None, [(20, 1)], 0 if p % 4 else None, 0.25) for p in range(20)]
    with tempfile.TemporaryDirectory() as tmp:
        path = export_labeled(cloud, records, stratify(records), Path(tmp) / "labeled.csv", NeighborhoodSpec.knn([20]))
        assert np.array_equal(load_cloud(path, "csv").points, cloud.points)
        header, first = path.read_text().splitlines()[:2]
        assert header == "x1,x2,x3,idim,lex_code,energy,stratum"
        assert first.split(",")[3:] == ["-1", "-1", "0", "-1"]
        assert not [name for name in os.listdir(tmp) if name.endswith(".tmp")]


def test_sphere_line_labels_hold_three_dimensions():
    cloud = gen_sphere_line(SphereLineSpec())
    spec = NeighborhoodSpec.ball(radius_ladder(2.0, 0.1, 0.1))
    records = compute_all_ids(cloud, IdParams(t=0.95, c=10, spec=spec))
    with tempfile.TemporaryDirectory() as tmp:
        path = export_labeled(cloud, records, stratify(records), Path(tmp) / "labeled.csv", spec)
        frame = pd.read_csv(path)
    assert set(frame["idim"].tolist()) == {1, 2, 3}
    assert frame["lex_code"].min() >= 1


def test_manifold_document_round_trip():
    points = _circle()
    mm = build_multimanifold(points, 1, BuildParams())
    document = manifold_to_document(mm)
    restored = manifold_from_document(document)
    assert np.array_equal(restored.assign_points(points), mm.assign_points(points))
    assert render_json(manifold_to_document(restored)) == render_json(document)
    assert _error_code(manifold_from_document, {**document, "version": 99}) == "bad-document"


def test_distribution_and_decision_documents():
    dist = _distribution([0.1, 0.2, 0.4])
    assert distribution_from_document(distribution_to_document(dist)) == dist
    decisions = [decide(0.2, dist, delta=0.1), decide(1.0, None, stratum_dim=3)]
    assert decisions_from_document(decisions_to_document(decisions)) == decisions


def test_write_artifacts_creates_directories():
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "nested" / "doc.json"
        written = write_artifacts({target: "{}\n"})
        assert written == [target] and target.read_text() == "{}\n"


# --- configuration and utilities --------------------------------------------------

def test_runtime_config_from_environment():
    from config import config

    previous = os.environ.get("MMH_THREADS")
    os.environ["MMH_THREADS"] = "3"
    try:
        config.reload()
        assert config.runtime.threads == 3
    finally:
        if previous is None:
            del os.environ["MMH_THREADS"]
        else:
            os.environ["MMH_THREADS"] = previous
        config.reload()


def test_run_spec_file_and_overrides():
    from config import load_run_spec

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "run.spec"
        path.write_text("# sphere-line run\nid.t = 0.9\nid.knn = 20,40\ntest.runs = 7\nbuild.max_depth = 5\n")
        spec = load_run_spec(path, {"id.radii": "1:0.5:0.25"})
        assert spec.id.knn is None and spec.id.radii == (1.0, 0.75, 0.5)
        assert spec.build.t == 0.9 and spec.test.t == 0.9 and spec.test.build.max_depth == 5
        assert spec.test.runs == 7

        try:
            load_run_spec(None, {"nonsense.key": "1"})
        except ValueError as e:
            assert "nonsense.key" in str(e)
        else:
            raise AssertionError("unknown keys should be rejected")
        assert _error_code(load_run_spec, Path(tmp) / "absent.spec") == "missing-input"


def test_flat_spec_parser_and_helpers():
    entries = parse_flat_spec("a.b = 1  # note\n\nc = x:y\n")
    assert entries == {"a.b": "1", "c": "x:y"}
    try:
        parse_flat_spec("ok = 1\nbroken line\n")
    except ValueError as e:
        assert "line 2" in str(e)
    else:
        raise AssertionError("expected a parse failure")
    assert parse_range("4:7", int) == [4, 7]
    assert parallel_map(lambda x: x * x, range(20), max_workers=4) == [x * x for x in range(20)]
    table = format_table(["d", "E(SQD)"], [[1, 0.0076], [2, 0.0096]])
    assert table.splitlines()[2].split() == ["1", "0.0076"]


def test_bad_thread_count_is_a_clean_error():
    from config import config
    from main import main as cli

    previous = os.environ.get("MMH_THREADS")
    os.environ["MMH_THREADS"] = "many"
    try:
        assert _error_code(config.reload) == "bad-config"
        with tempfile.TemporaryDirectory() as tmp:
            assert cli(["gen", "--out-dir", tmp]) == 1
    finally:
        if previous is None:
            del os.environ["MMH_THREADS"]
        else:
            os.environ["MMH_THREADS"] = previous
        config.reload()


# --- command line -----------------------------------------------------------------

def test_cli_idim_writes_labeled_csv():
    from main import main as cli

    cloud = gen_linear_patch(200, 2, 3, seed=12)
    with tempfile.TemporaryDirectory() as tmp:
        source = Path(tmp) / "patch.xyz"
        cloud_frame(cloud).to_csv(source, sep=" ", header=False, index=False, float_format="%.17g")
        out = Path(tmp) / "out"
        status = cli(["idim", "--input", str(source), "--format", "xyz", "--knn", "10,20", "--out-dir", str(out)])
        assert status == 0
        assert np.array_equal(load_cloud(out / "labeled.csv", "csv").points, cloud.points)
        assert not list(out.glob("distribution_dim*.json"))

        assert cli(["idim", "--input", str(Path(tmp) / "absent.csv"), "--out-dir", str(out)]) == 1


GROUPS = [
    ("Core", [
        test_point_cloud_rejects_non_finite, test_point_cloud_is_read_only, test_svd_summary_ordering,
        test_best_fit_residual_matches_singular_tail, test_best_fit_rejects_dimension_above_ambient,
        test_affine_subspace_requires_orthonormal_basis, test_residual_invariant_under_rigid_motion,
        test_svd_invariant_under_permutation, test_svd_under_uniform_scaling, test_error_context_rendering,
    ]),
    ("Neighborhoods", [
        test_index_matches_brute_force_scan, test_knn_tie_breaking, test_ball_is_closed, test_balls_are_nested,
        test_knn_rejects_k_above_cloud_size, test_dyadic_and_arithmetic_ladders, test_neighborhood_spec_validation,
    ]),
    ("Intrinsic dimension", [
        test_dimension_from_sigma_threshold, test_d_vid_cutoff_and_collinear_points, test_d_vid_monotone_in_threshold,
        test_raising_cutoff_only_removes_scales, test_local_dimension_on_plane,
        test_undefined_points, test_stratify_and_encodings, test_point_mass_code_differs_from_undefined,
        test_ball_and_knn_agree_on_a_line,
        test_gmst_edge_length, test_gmst_recovers_a_line, test_gmst_edge_length_under_scaling,
        test_gmst_calibration_table, test_gmst_sampling_variants_on_a_plane, test_gmst_fit_needs_two_sizes,
    ]),
    ("Multi-manifolds", [
        test_min_leaf_rule, test_root_cube_and_split, test_exact_plane_gives_one_component,
        test_circle_partition_invariants, test_depth_zero_keeps_the_root, test_points_in_dropped_cubes_have_no_leaf,
        test_empty_stratum_is_an_error,
    ]),
    ("Hypothesis testing", [
        test_sqd_component_values, test_sqd_bound_at_threshold_extremes, test_sqd_total_accounting,
        test_decide_interval, test_decide_edge_cases,
        test_resample_distribution_on_plane, test_resample_seeds_give_different_samples,
        test_resample_rejects_tiny_strata, test_full_test_verdicts,
    ]),
    ("Ingestion", [
        test_sphere_line_construction, test_area_uniform_sphere_sampling, test_linear_patch_rank, test_load_xyz_and_csv,
        test_load_errors_carry_line_numbers,
    ]),
    ("Storage", [
        test_labeled_export_round_trip, test_sphere_line_labels_hold_three_dimensions, test_manifold_document_round_trip,
        test_distribution_and_decision_documents, test_write_artifacts_creates_directories,
    ]),
    ("Configuration", [
        test_runtime_config_from_environment, test_run_spec_file_and_overrides, test_flat_spec_parser_and_helpers,
        test_bad_thread_count_is_a_clean_error,
    ]),
    ("CLI", [test_cli_idim_writes_labeled_csv]),
]


def run_group(name, tests) -> bool:
    """Run one group of tests, printing a line per test."""
    print(f"\nTesting {name}...")
    passed = True
    for test in tests:
        try:
            test()
            print(f"  ✓ {test.__name__}")
        except Exception as e:
            passed = False
            print(f"  ✗ {test.__name__} failed: {type(e).__name__}: {e}")
    return passed


def main():
    """Run all tests."""
    load_dotenv()

    print("=" * 60)
    print("Multi-Manifold Hypothesis Toolkit - Component Tests")
    print("=" * 60)

    results = [(name, run_group(name, tests)) for name, tests in GROUPS]

    print("\n" + "=" * 60)
    print("Test Summary:")
    print("=" * 60)

    for name, passed in results:
        status = "✓ PASSED" if passed else "✗ FAILED"
        print(f"{name:20s} {status}")

    total_passed = sum(1 for _, passed in results if passed)
    print(f"\nTotal: {total_passed}/{len(results)} groups passed")
    return total_passed == len(results)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
