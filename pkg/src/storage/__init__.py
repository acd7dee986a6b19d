"""Storage module for the multi-manifold toolkit."""
from .artifacts import (
    DECISIONS_SCHEMA,
    DISTRIBUTION_SCHEMA,
    MANIFOLD_SCHEMA,
    SCHEMA_VERSION,
    cloud_frame,
    decisions_from_document,
    decisions_to_document,
    distribution_from_document,
    distribution_to_document,
    export_labeled,
    labeled_frame,
    manifold_from_document,
    manifold_to_document,
    read_json,
    render_csv,
    render_json,
    write_artifacts,
)

__all__ = [
    "DECISIONS_SCHEMA",
    "DISTRIBUTION_SCHEMA",
    "MANIFOLD_SCHEMA",
    "SCHEMA_VERSION",
    "cloud_frame",
    "decisions_from_document",
    "decisions_to_document",
    "distribution_from_document",
    "distribution_to_document",
    "export_labeled",
    "labeled_frame",
    "manifold_from_document",
    "manifold_to_document",
    "read_json",
    "render_csv",
    "render_json",
    "write_artifacts",
]
