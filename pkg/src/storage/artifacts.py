"""
Artifact Storage Module for the multi-manifold toolkit.
Labeled point-cloud csv files and versioned JSON documents for
multi-manifolds, resampling distributions and decisions.
"""
import json
import logging
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import jsonschema
import numpy as np
import pandas as pd

from ..core import AffineSubspace, MultiManifoldError, PointCloud, SvdSummary
from ..hypothesis import Decision, TestDistribution
from ..idim import GmstFit, LocalIdRecord, Strata, UNDEFINED_CODE, diagnostic_encodings
from ..multimanifold import BuildParams, DyadicCube, LinearComponent, MultiManifold
from ..neighborhoods import NeighborhoodSpec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _NUMBER_LIST}

MANIFOLD_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["schema", "version", "stratum_dim", "params", "root", "components",
                 "dropped_count", "min_leaf_points"],
    "properties": {
        "schema": {"const": "multimanifold"},
        "version": {"const": SCHEMA_VERSION},
        "stratum_dim": {"type": "integer", "minimum": 0},
        "params": {"type": "object"},
        "dropped_count": {"type": "integer", "minimum": 0},
        "min_leaf_points": {"type": "integer", "minimum": 1},
        "root": {
            "type": "object",
            "required": ["lo", "side"],
            "properties": {"lo": _NUMBER_LIST, "side": _NUMBER_LIST},
        },
        "components": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "path", "depth", "lo", "side", "origin", "basis",
                             "member_ids", "mean", "singular_values", "svd_basis", "count"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "path": {"type": "string", "pattern": "^[01]*$"},
                    "depth": {"type": "integer", "minimum": 0},
                    "lo": _NUMBER_LIST,
                    "side": _NUMBER_LIST,
                    "origin": _NUMBER_LIST,
                    "basis": _MATRIX,
                    "member_ids": {"type": "array", "items": {"type": "integer"}},
                    "mean": _NUMBER_LIST,
                    "singular_values": _NUMBER_LIST,
                    "svd_basis": _MATRIX,
                    "count": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}

DISTRIBUTION_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["schema", "version", "stratum_dim", "runs", "samples", "mean", "sd", "z_cutoff",
                 "train_count", "test_count", "support_fraction", "delta", "seed"],
    "properties": {
        "schema": {"const": "test-distribution"},
        "version": {"const": SCHEMA_VERSION},
        "stratum_dim": {"type": "integer", "minimum": 0},
        "runs": {"type": "integer", "minimum": 1},
        "samples": _NUMBER_LIST,
        "exact_samples": _NUMBER_LIST,
        "component_counts": {"type": "array", "items": {"type": "integer"}},
        "mean": {"type": "number"},
        "sd": {"type": "number", "minimum": 0},
        "z_cutoff": {"type": "number"},
        "train_count": {"type": "number"},
        "test_count": {"type": "number"},
        "support_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "delta": {"type": "number"},
        "seed": {"type": "integer"},
    },
}

DECISIONS_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["schema", "version", "decisions"],
    "properties": {
        "schema": {"const": "decisions"},
        "version": {"const": SCHEMA_VERSION},
        "decisions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["stratum_dim", "statistic", "interval", "verdict", "support_fraction", "warnings"],
                "properties": {
                    "stratum_dim": {"type": "integer"},
                    "statistic": {"type": ["number", "null"]},
                    "interval": {"oneOf": [{"type": "null"}, {**_NUMBER_LIST, "minItems": 2, "maxItems": 2}]},
                    "verdict": {"enum": ["accept", "reject", "reject-no-matching-stratum"]},
                    "support_fraction": {"type": "number"},
                    "warnings": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}


def _validate(document: Mapping[str, Any], schema: Dict[str, Any]) -> None:
    try:
        jsonschema.validate(instance=document, schema=schema)
    except jsonschema.ValidationError as e:
        raise MultiManifoldError(f"Invalid {schema['properties']['schema']['const']} document: {e.message}",
                                 "bad-document") from e


def _floats(array) -> List[Any]:
    return np.asarray(array, dtype=np.float64).tolist()


# --- multi-manifolds ---------------------------------------------------------

def manifold_to_document(mm: MultiManifold) -> Dict[str, Any]:
    components = [
        {
            "id": component.component_id,
            "path": component.cube.path,
            "depth": component.cube.depth,
            "lo": _floats(component.cube.lo),
            "side": _floats(component.cube.side),
            "origin": _floats(component.subspace.origin),
            "basis": _floats(component.subspace.basis),
            "member_ids": [int(i) for i in component.member_ids],
            "mean": _floats(component.svd.mean),
            "singular_values": _floats(component.svd.singular_values),
            "svd_basis": _floats(component.svd.basis),
            "count": component.svd.count,
        }
        for component in mm.components
    ]
    document = {
        "schema": "multimanifold",
        "version": SCHEMA_VERSION,
        "stratum_dim": mm.stratum_dim,
        "params": mm.params.model_dump(),
        "dropped_count": mm.dropped_count,
        "min_leaf_points": mm.min_leaf_points,
        "root": {"lo": _floats(mm.root.lo), "side": _floats(mm.root.side)},
        "components": components,
    }
    _validate(document, MANIFOLD_SCHEMA)
    return document


def manifold_from_document(document: Mapping[str, Any]) -> MultiManifold:
    _validate(document, MANIFOLD_SCHEMA)
    ambient = len(document["root"]["lo"])
    components = []
    for entry in document["components"]:
        cube = DyadicCube(np.asarray(entry["lo"]), np.asarray(entry["side"]), entry["depth"], entry["path"])
        basis = np.asarray(entry["basis"], dtype=np.float64).reshape(-1, ambient)
        svd = SvdSummary(
            mean=np.asarray(entry["mean"]),
            singular_values=np.asarray(entry["singular_values"]),
            basis=np.asarray(entry["svd_basis"], dtype=np.float64).reshape(-1, ambient),
            count=entry["count"],
        )
        components.append(
            LinearComponent(
                component_id=entry["id"],
                cube=cube,
                subspace=AffineSubspace(np.asarray(entry["origin"]), basis),
                member_ids=np.asarray(entry["member_ids"], dtype=np.intp),
                svd=svd,
            )
        )
    return MultiManifold(
        stratum_dim=document["stratum_dim"],
        root=DyadicCube(np.asarray(document["root"]["lo"]), np.asarray(document["root"]["side"])),
        components=components,
        params=BuildParams.model_validate(document["params"]),
        dropped_count=document["dropped_count"],
        min_leaf_points=document["min_leaf_points"],
    )


# --- distributions and decisions ---------------------------------------------

def distribution_to_document(dist: TestDistribution) -> Dict[str, Any]:
    document = {"schema": "test-distribution", "version": SCHEMA_VERSION, **asdict(dist)}
    _validate(document, DISTRIBUTION_SCHEMA)
    return document


def distribution_from_document(document: Mapping[str, Any]) -> TestDistribution:
    _validate(document, DISTRIBUTION_SCHEMA)
    fields = {key: value for key, value in document.items() if key not in ("schema", "version")}
    return TestDistribution(**fields)


def decisions_to_document(decisions: Sequence[Decision]) -> Dict[str, Any]:
    entries = []
    for decision in decisions:
        entry = asdict(decision)
        entry["interval"] = None if decision.interval is None else list(decision.interval)
        entries.append(entry)
    document = {"schema": "decisions", "version": SCHEMA_VERSION, "decisions": entries}
    _validate(document, DECISIONS_SCHEMA)
    return document


def decisions_from_document(document: Mapping[str, Any]) -> List[Decision]:
    _validate(document, DECISIONS_SCHEMA)
    decisions = []
    for entry in document["decisions"]:
        interval = None if entry["interval"] is None else tuple(entry["interval"])
        decisions.append(Decision(**{**entry, "interval": interval}))
    return decisions


def render_json(document: Mapping[str, Any]) -> str:
    """Deterministic rendering: sorted keys, shortest round-trip floats."""
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


# --- csv ----------------------------------------------------------------------

def cloud_frame(cloud: PointCloud) -> pd.DataFrame:
    return pd.DataFrame(cloud.points, columns=[f"x{j + 1}" for j in range(cloud.dim)])


def labeled_frame(
    cloud: PointCloud,
    records: Sequence[LocalIdRecord],
    strata: Strata,
    spec: NeighborhoodSpec,
    gmst: Optional[Sequence[GmstFit]] = None,
) -> pd.DataFrame:
    """Coordinates followed by idim, lex_code, energy, stratum (and gmst_dim when given)."""
    if len(records) != len(cloud):
        raise MultiManifoldError(
            f"{len(records)} records for {len(cloud)} points", "misaligned-records"
        )
    frame = cloud_frame(cloud)
    encodings = diagnostic_encodings(records, spec)
    frame["idim"] = [UNDEFINED_CODE if r.dimension is None else r.dimension for r in records]
    frame["lex_code"] = [code for code, _ in encodings]
    frame["energy"] = [energy for _, energy in encodings]
    frame["stratum"] = strata.labels(len(cloud))
    if gmst is not None:
        column = np.full(len(cloud), np.nan)
        for fit in gmst:
            column[fit.point_id] = fit.d_est
        frame["gmst_dim"] = column
    return frame


def render_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT)


# --- writing ------------------------------------------------------------------

def write_artifacts(files: Mapping[Union[str, Path], str]) -> List[Path]:
    """Write every rendered artifact through a temp file and ``os.replace``."""
    written = []
    for target, content in files.items():
        target = Path(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, temp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(content)
            os.replace(temp, target)
        except OSError:
            if os.path.exists(temp):
                os.unlink(temp)
            raise
        written.append(target)
        logger.debug("Wrote %s", target)
    return written


def export_labeled(
    cloud: PointCloud,
    records: Sequence[LocalIdRecord],
    strata: Strata,
    path: Union[str, Path],
    spec: NeighborhoodSpec,
    gmst: Optional[Sequence[GmstFit]] = None,
) -> Path:
    """Write the labeled csv; coordinates reload bit-exactly."""
    return write_artifacts({path: render_csv(labeled_frame(cloud, records, strata, spec, gmst))})[0]
