"""
Configuration management for the Multi-Manifold Hypothesis Toolkit.
Runtime settings come from the environment; run settings from a flat
``key = value`` spec file with dotted section keys, overridden by CLI flags.
"""
import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core import MultiManifoldError
from src.idim import GmstParams, IdParams
from src.ingestion import SphereLineSpec
from src.multimanifold import BuildParams
from src.neighborhoods import NeighborhoodSpec, dyadic_radii, knn_ladder, radius_ladder
from src.hypothesis import TestConfig
from src.utils.helpers import parse_flat_spec, parse_list, parse_range


class RuntimeConfig(BaseModel):
    """Process-wide settings read from the environment."""
    threads: int = Field(default=0, ge=0, description="Worker threads (0 = one per CPU, 1 = serial)")
    log_level: str = Field(default="INFO", description="Root logging level")
    out_dir: str = Field(default="out", description="Default artifact directory")


class AppConfig:
    """Application configuration manager."""

    def __init__(self):
        """Initialize configuration from environment variables."""
        self.runtime = RuntimeConfig()
        try:
            self.reload()
        except MultiManifoldError:
            # keep the defaults at import; main() reloads and reports the error
            pass

    def reload(self) -> None:
        """Re-read the environment (after ``load_dotenv`` or in tests)."""
        raw = {
            "threads": os.getenv("MMH_THREADS", "0").strip() or "0",
            "log_level": os.getenv("MMH_LOG_LEVEL", "INFO").upper(),
            "out_dir": os.getenv("MMH_OUT_DIR", "out"),
        }
        try:
            self.runtime = RuntimeConfig(**raw)
        except ValidationError as e:
            fields = sorted({str(error['loc'][0]) for error in e.errors()})
            names = ", ".join(f"MMH_{field.upper()}={raw[field]!r}" for field in fields)
            raise MultiManifoldError(
                f"Invalid environment setting {names}: MMH_THREADS must be a non-negative integer",
                "bad-config",
                {field: raw[field] for field in fields},
            ) from e


# Global configuration instance
config = AppConfig()


# --- run spec files --------------------------------------------------------------

class InputSpec(BaseModel):
    """A point-cloud file, or nothing to use the sphere-line generator."""
    model_config = ConfigDict(frozen=True)

    path: Optional[str] = Field(default=None, description="csv or xyz file")
    format: Literal["csv", "xyz"] = Field(default="csv", description="File format")
    seed: Optional[int] = Field(default=None, description="Generator seed when no path is given")


class IdSection(BaseModel):
    """Local dimension settings; exactly one neighborhood family is used."""
    model_config = ConfigDict(frozen=True)

    t: float = Field(default=0.95, gt=0.0, le=1.0, description="Variance threshold")
    c: int = Field(default=10, ge=1, description="Neighborhood size cutoff")
    radii: Optional[Tuple[float, ...]] = Field(default=None, description="Explicit ball radii, largest first")
    scales: Optional[Tuple[int, int]] = Field(default=None, description="Dyadic scales lo:hi")
    knn: Optional[Tuple[int, ...]] = Field(default=None, description="kNN counts, smallest first")

    @field_validator("radii", mode="before")
    @classmethod
    def _parse_radii(cls, value: Any) -> Any:
        if isinstance(value, str):
            if ":" in value:
                parts = parse_range(value)
                if len(parts) != 3:
                    raise ValueError("radii range needs 'first:last:step'")
                first, last, step = parts
                return tuple(radius_ladder(max(first, last), min(first, last), step))
            return tuple(sorted(parse_list(value, float), reverse=True))
        return value

    @field_validator("scales", mode="before")
    @classmethod
    def _parse_scales(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(parse_range(value, int)[:2])
        return value

    @field_validator("knn", mode="before")
    @classmethod
    def _parse_knn(cls, value: Any) -> Any:
        if isinstance(value, str):
            if ":" in value:
                parts = parse_range(value, int)
                return tuple(knn_ladder(parts[0], parts[1], parts[2] if len(parts) == 3 else 25))
            return tuple(sorted(parse_list(value, int)))
        return value

    @model_validator(mode="after")
    def _one_family(self) -> "IdSection":
        chosen = [name for name in ("radii", "scales", "knn") if getattr(self, name) is not None]
        if len(chosen) > 1:
            raise ValueError(f"choose one neighborhood family, got {', '.join(chosen)}")
        return self

    def neighborhood_spec(self, cloud) -> NeighborhoodSpec:
        if self.knn is not None:
            return NeighborhoodSpec.knn(self.knn)
        if self.scales is not None:
            return NeighborhoodSpec.ball(dyadic_radii(cloud, self.scales[0], self.scales[1]))
        return NeighborhoodSpec.ball(self.radii or radius_ladder(2.0, 0.1, 0.1))

    def params_for(self, cloud) -> IdParams:
        return IdParams(t=self.t, c=self.c, spec=self.neighborhood_spec(cloud))


class GmstSection(BaseModel):
    """Optional GMST cross-check over a subset of points."""
    model_config = ConfigDict(frozen=True)

    enabled: bool = Field(default=False, description="Run the GMST estimator")
    n_range: Tuple[int, ...] = Field(default=tuple(range(200, 401, 25)), description="Neighborhood sizes")
    k: int = Field(default=5, ge=1, description="kNN graph degree")
    gamma: float = Field(default=1.0, gt=0.0, description="Edge-length exponent")
    averaging: Literal["joint", "pairwise"] = Field(default="joint", description="Fit variant")
    sampling: Literal["subsample", "nested"] = Field(default="subsample", description="Sample-size ladder")
    resamples: int = Field(default=5, ge=1, description="Subsets averaged per size")
    calibrate: bool = Field(default=True, description="Uniform-ball calibration of the exponent")
    probes: int = Field(default=200, ge=1, description="Evenly spaced probe points")

    @field_validator("n_range", mode="before")
    @classmethod
    def _parse_n_range(cls, value: Any) -> Any:
        if isinstance(value, str):
            if ":" in value:
                parts = parse_range(value, int)
                return tuple(knn_ladder(parts[0], parts[1], parts[2] if len(parts) == 3 else 25))
            return tuple(parse_list(value, int))
        return value

    def params(self) -> GmstParams:
        return GmstParams(
            n_range=self.n_range, k=self.k, gamma=self.gamma, averaging=self.averaging,
            sampling=self.sampling, resamples=self.resamples, calibrate=self.calibrate,
        )


class RunSpec(BaseModel):
    """Everything one CLI invocation needs."""
    model_config = ConfigDict(frozen=True)

    input: InputSpec = Field(default_factory=InputSpec)
    candidate: Optional[InputSpec] = Field(default=None, description="Candidate cloud for the test")
    gen: SphereLineSpec = Field(default_factory=SphereLineSpec)
    id: IdSection = Field(default_factory=IdSection)
    gmst: GmstSection = Field(default_factory=GmstSection)
    build: BuildParams = Field(default_factory=BuildParams)
    test: TestConfig = Field(default_factory=TestConfig)
    out_dir: str = Field(default_factory=lambda: config.runtime.out_dir)


_SECTIONS = ("input", "candidate", "gen", "id", "gmst", "build", "test")
_FAMILY_KEYS = ("id.radii", "id.scales", "id.knn")


def nest_entries(entries: Mapping[str, str]) -> Dict[str, Any]:
    """Turn ``section.key = value`` entries into nested dicts for RunSpec."""
    nested: Dict[str, Any] = {}
    for key, value in entries.items():
        if key in ("out_dir", "out.dir"):
            nested["out_dir"] = value
            continue
        section, _, name = key.partition(".")
        if section not in _SECTIONS or not name:
            raise ValueError(f"Unknown spec key {key!r}")
        nested.setdefault(section, {})[name] = value

    # leaf dimensions and the SQD bound share the dimension threshold unless set apart
    threshold = nested.get("id", {}).get("t")
    build = nested.setdefault("build", {})
    test = nested.setdefault("test", {})
    if threshold is not None:
        build.setdefault("t", threshold)
        test.setdefault("t", threshold)
    test.setdefault("build", dict(build))
    return nested


def load_run_spec(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, str]] = None) -> RunSpec:
    """Read a spec file (if any) and apply flag overrides on top."""
    entries: Dict[str, str] = {}
    if path is not None:
        spec_path = Path(path)
        if not spec_path.is_file():
            raise MultiManifoldError(f"Spec file not found: {spec_path}", "missing-input", {"path": str(spec_path)})
        entries.update(parse_flat_spec(spec_path.read_text(encoding="utf-8")))
    overrides = dict(overrides or {})
    # a neighborhood family given as a flag replaces the file's family
    if any(key in overrides for key in _FAMILY_KEYS):
        for key in _FAMILY_KEYS:
            entries.pop(key, None)
    entries.update(overrides)
    return RunSpec.model_validate(nest_entries(entries))
