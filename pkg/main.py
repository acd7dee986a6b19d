"""
Main Pipeline for the Multi-Manifold Hypothesis Toolkit.
Orchestrates the workflow: Generate/Load -> Local dimensions -> Strata ->
Multi-manifolds -> Resampling distributions -> Decisions.
"""
import sys
import os
import argparse
import logging
from pathlib import Path
from typing import Dict, List, Optional

# Add src to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from config import RunSpec, config, load_run_spec
from src.core import MultiManifoldError, PointCloud
from src.hypothesis import (
    Decision,
    TestDistribution,
    build_params_for,
    resample_distribution,
    run_full_test,
    sqd_total,
)
from src.idim import GmstFit, LocalIdRecord, Strata, compute_all_gmst, compute_all_ids, stratify
from src.ingestion import gen_sphere_line, load_cloud
from src.multimanifold import MultiManifold, build_multimanifold
from src.storage import (
    cloud_frame,
    decisions_to_document,
    distribution_to_document,
    labeled_frame,
    manifold_to_document,
    render_csv,
    render_json,
    write_artifacts,
)
from src.utils.helpers import format_table

SUBCOMMANDS = ("gen", "idim", "stratify", "build", "test", "run")


class MultiManifoldPipeline:
    """Main pipeline orchestrator."""

    def __init__(self, spec: RunSpec, max_workers: Optional[int] = None):
        """Initialize pipeline state; artifacts are held until ``flush``."""
        self.spec = spec
        self.max_workers = max_workers
        self.out_dir = Path(spec.out_dir)
        self.pending: Dict[Path, str] = {}

        self.cloud: Optional[PointCloud] = None
        self.records: List[LocalIdRecord] = []
        self.strata: Optional[Strata] = None
        self.gmst: Optional[List[GmstFit]] = None
        self.manifolds: Dict[int, MultiManifold] = {}
        self.distributions: Dict[int, TestDistribution] = {}
        self.decisions: List[Decision] = []

    # --- inputs ---------------------------------------------------------------

    def load_data(self) -> PointCloud:
        source = self.spec.input
        if source.path:
            self.cloud = load_cloud(source.path, source.format)
            print(f"✓ Loaded {len(self.cloud)} points in R^{self.cloud.dim} from {source.path}")
        else:
            gen = self.spec.gen if source.seed is None else self.spec.gen.model_copy(update={"seed": source.seed})
            self.cloud = gen_sphere_line(gen)
            print(f"✓ Generated sphere-line cloud: {gen.n_sphere} sphere + {gen.n_line} line points (seed {gen.seed})")
        return self.cloud

    def load_candidate(self) -> Optional[PointCloud]:
        source = self.spec.candidate
        if source is None:
            return None
        if source.path:
            candidate = load_cloud(source.path, source.format)
        else:
            seed = source.seed if source.seed is not None else self.spec.gen.seed + 1
            candidate = gen_sphere_line(self.spec.gen.model_copy(update={"seed": seed}))
        print(f"✓ Candidate cloud: {len(candidate)} points")
        return candidate

    # --- steps ----------------------------------------------------------------

    def run_gen(self) -> PointCloud:
        cloud = self.load_data()
        self.pending[self.out_dir / "cloud.csv"] = render_csv(cloud_frame(cloud))
        return cloud

    def run_idim(self) -> Strata:
        cloud = self.cloud if self.cloud is not None else self.load_data()
        id_params = self.spec.id.params_for(cloud)
        print(f"\n[1/3] Local dimensions over {len(id_params.spec)} scales (t = {id_params.t}, c = {id_params.c})...")
        self.records = compute_all_ids(cloud, id_params, self.max_workers)
        self.strata = stratify(self.records)
        print(f"✓ Strata: {self.strata.counts()}, unclassified {self.strata.unclassified.size}")

        if self.spec.gmst.enabled:
            self.gmst = self._run_gmst(cloud)
        frame = labeled_frame(cloud, self.records, self.strata, id_params.spec, self.gmst)
        self.pending[self.out_dir / "labeled.csv"] = render_csv(frame)
        return self.strata

    def _run_gmst(self, cloud: PointCloud) -> Optional[List[GmstFit]]:
        params = self.spec.gmst.params()
        if max(params.n_range) > len(cloud):
            print(f"⚠ GMST skipped: neighborhood size {max(params.n_range)} exceeds {len(cloud)} points")
            return None
        probes = np.unique(np.linspace(0, len(cloud) - 1, min(self.spec.gmst.probes, len(cloud))).astype(int))
        fits = compute_all_gmst(cloud, params, probes, self.max_workers)
        print(f"✓ GMST on {len(fits)} probes: mean estimate {np.mean([fit.d_est for fit in fits]):.3f}")
        return fits

    def run_build(self) -> Dict[int, MultiManifold]:
        strata = self.strata if self.strata is not None else self.run_idim()
        build = build_params_for(self.spec.build, strata)
        print(f"\n[2/3] Building dyadic linear multi-manifolds (max depth {build.max_depth})...")
        for i in strata.dims:
            ids = strata.groups[i]
            try:
                self.manifolds[i] = build_multimanifold(self.cloud.subset(ids), i, build, ids=ids)
            except MultiManifoldError as e:
                raise e.with_context(stratum=i) from e
            self.pending[self.out_dir / f"manifold_dim{i}.json"] = render_json(manifold_to_document(self.manifolds[i]))
        print(f"✓ Built {sum(len(mm.components) for mm in self.manifolds.values())} components")
        print()
        print(self.manifold_table())
        return self.manifolds

    def run_test(self) -> Dict[int, TestDistribution]:
        candidate = self.load_candidate()
        if candidate is not None:
            return self._run_full_test(candidate)

        if not self.manifolds:
            self.run_build()
        test = self.spec.test.model_copy(update={"build": build_params_for(self.spec.test.build, self.strata)})
        print(f"\n[3/3] Resampling {test.runs} train/test splits per stratum...")
        for i in self.strata.dims:
            try:
                self.distributions[i] = resample_distribution(
                    self.cloud.subset(self.strata.groups[i]), i, test, self.max_workers
                )
            except MultiManifoldError as e:
                raise e.with_context(stratum=i) from e
        self._queue_distributions()
        print()
        print(self.distribution_table())
        return self.distributions

    def _run_full_test(self, candidate: PointCloud) -> Dict[int, TestDistribution]:
        cloud = self.cloud if self.cloud is not None else self.load_data()
        id_params = self.spec.id.params_for(cloud)
        print(f"\n[1/3] Testing candidate against {len(cloud)} data points ({self.spec.test.runs} runs)...")
        result = run_full_test(cloud, candidate, id_params, self.spec.test, self.max_workers)
        self.records, self.strata = result.data_records, result.data_strata
        self.manifolds, self.distributions = result.manifolds, result.distributions
        self.decisions = result.decisions

        self.pending[self.out_dir / "labeled.csv"] = render_csv(
            labeled_frame(cloud, self.records, self.strata, id_params.spec)
        )
        for i, mm in self.manifolds.items():
            self.pending[self.out_dir / f"manifold_dim{i}.json"] = render_json(manifold_to_document(mm))
        self._queue_distributions()
        self.pending[self.out_dir / "decisions.json"] = render_json(decisions_to_document(self.decisions))

        print()
        print(self.manifold_table())
        print()
        print(self.distribution_table())
        print()
        print(self.decision_table())
        return self.distributions

    def _queue_distributions(self) -> None:
        for i, dist in self.distributions.items():
            self.pending[self.out_dir / f"distribution_dim{i}.json"] = render_json(distribution_to_document(dist))

    # --- reporting ------------------------------------------------------------

    def manifold_table(self) -> str:
        rows = []
        for i in self.strata.dims:
            mm = self.manifolds[i]
            members = self.cloud.subset(self.strata.groups[i])
            rows.append([i, members.shape[0], mm.supported_count, len(mm.components), sqd_total(members, mm).mean_bound])
        return format_table(["dim", "total pts", "manifold pts", "components", "E(SQD)"], rows)

    def distribution_table(self) -> str:
        rows = [
            [i, dist.mean, dist.support_fraction, round(dist.train_count), round(dist.test_count),
             dist.runs, dist.sd, dist.z_cutoff]
            for i, dist in sorted(self.distributions.items())
        ]
        return format_table(
            ["d", "E(E(SQD))", "support", "train count", "test count", "runs", "SD", "z cutoff"], rows
        )

    def decision_table(self) -> str:
        rows = []
        for decision in self.decisions:
            lower, upper = decision.interval if decision.interval else (float("nan"), float("nan"))
            statistic = "-" if decision.statistic is None else decision.statistic
            rows.append([decision.stratum_dim, statistic, lower, upper,
                         decision.support_fraction, decision.verdict])
        return format_table(["d", "statistic", "lower", "upper", "support", "verdict"], rows)

    def flush(self) -> List[Path]:
        """Write every queued artifact at once."""
        written = write_artifacts(self.pending)
        for path in written:
            print(f"✓ Wrote {path}")
        self.pending = {}
        return written

    def execute(self, command: str) -> List[Path]:
        steps = {
            "gen": self.run_gen,
            "idim": self.run_idim,
            "stratify": self.run_idim,
            "build": self.run_build,
            "test": self.run_test,
            "run": self.run_test,
        }
        steps[command]()
        return self.flush()


def overrides_from_args(args: argparse.Namespace) -> Dict[str, str]:
    """Map command-line flags onto dotted spec keys."""
    flags = {
        "input": ["input.path"],
        "format": ["input.format", "candidate.format"],
        "candidate": ["candidate.path"],
        "candidate_seed": ["candidate.seed"],
        "t": ["id.t"],
        "cutoff": ["id.c"],
        "radii": ["id.radii"],
        "scales": ["id.scales"],
        "knn": ["id.knn"],
        "runs": ["test.runs"],
        "test_fraction": ["test.test_fraction"],
        "delta": ["test.delta"],
        "seed": ["gen.seed", "test.seed"],
        "out_dir": ["out_dir"],
    }
    overrides: Dict[str, str] = {}
    for name, keys in flags.items():
        value = getattr(args, name, None)
        if value is None:
            continue
        for key in keys:
            if key == "candidate.format" and args.candidate is None:
                continue
            overrides[key] = str(value)
    if args.gmst:
        overrides["gmst.enabled"] = "true"
    if args.one_sided:
        overrides["test.one_sided"] = "true"
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Multi-Manifold Hypothesis Toolkit - local dimension and SQD testing")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="Run spec file (dotted key = value lines)")
    common.add_argument("--input", help="Point-cloud file; omit to use the sphere-line generator")
    common.add_argument("--format", choices=["csv", "xyz"], help="Input file format")
    common.add_argument("--candidate", help="Candidate point-cloud file to test")
    common.add_argument("--candidate-seed", type=int, help="Generate the candidate with this seed")
    common.add_argument("--t", type=float, help="Variance threshold")
    common.add_argument("--cutoff", type=int, help="Minimum neighborhood size c")
    common.add_argument("--radii", help="Ball radii first:last:step or r1,r2,...")
    common.add_argument("--scales", help="Dyadic scales lo:hi")
    common.add_argument("--knn", help="kNN counts k1,k2,... or lo:hi:step")
    common.add_argument("--gmst", action="store_true", help="Add GMST estimates to the labeled csv")
    common.add_argument("--runs", type=int, help="Resampling runs per stratum")
    common.add_argument("--test-fraction", type=float, help="Held-out share per run")
    common.add_argument("--delta", type=float, help="Significance level")
    common.add_argument("--seed", type=int, help="Generator and resampling seed")
    common.add_argument("--out-dir", help="Artifact directory")
    common.add_argument("--one-sided", action="store_true", help="Reject only above the interval")

    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "gen": "Generate the sphere-line cloud",
        "idim": "Per-point local dimensions and labeled csv",
        "stratify": "Group points by local dimension",
        "build": "Build multi-manifolds per stratum",
        "test": "Resampling distributions, and decisions for a candidate",
        "run": "Full pipeline",
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=descriptions[name])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point with CLI arguments; returns the exit status."""
    args = build_parser().parse_args(argv)

    print("=" * 60)
    print("Multi-Manifold Hypothesis Toolkit")
    print("=" * 60)

    try:
        # Load environment variables
        load_dotenv()
        config.reload()
        logging.basicConfig(
            level=getattr(logging, config.runtime.log_level, logging.INFO),
            format="%(levelname)s %(name)s: %(message)s",
        )
        spec = load_run_spec(args.spec, overrides_from_args(args))
        pipeline = MultiManifoldPipeline(spec)
        pipeline.execute(args.command)
    except MultiManifoldError as e:
        print(f"✗ {e}", file=sys.stderr)
        return 1
    except ValidationError as e:
        print(f"✗ Invalid parameters: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return 1

    print("\n✓ Pipeline execution complete")
    return 0


if __name__ == "__main__":
    sys.exit(main())
