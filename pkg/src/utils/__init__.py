"""Utilities module for the multi-manifold toolkit."""
from .helpers import (
    format_table,
    parallel_map,
    parse_flat_spec,
    parse_list,
    parse_range,
    resolve_workers,
)

__all__ = [
    "format_table",
    "parallel_map",
    "parse_flat_spec",
    "parse_list",
    "parse_range",
    "resolve_workers",
]
