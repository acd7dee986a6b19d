"""Utility functions for the multi-manifold toolkit."""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def resolve_workers(max_workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else MMH_THREADS from the app config (0 = auto)."""
    if max_workers is None:
        from config import config

        max_workers = config.runtime.threads
    if max_workers <= 0:
        max_workers = os.cpu_count() or 1
    return max_workers


def parallel_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply ``func`` to every item, results in input order regardless of scheduling."""
    items = list(items)
    workers = min(resolve_workers(max_workers), max(len(items), 1))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug("Mapping %d items over %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def parse_flat_spec(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines with dotted keys; ``#`` starts a comment.

    Raises ValueError naming the offending line.
    """
    entries: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"Spec line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"Spec line {number}: empty key")
        entries[key] = value
    return entries


def parse_range(text: str, cast: Callable[[str], Any] = float) -> List[Any]:
    """Split ``a:b`` or ``a:b:c`` into its cast parts."""
    parts = [cast(part) for part in text.split(":")]
    if len(parts) not in (2, 3):
        raise ValueError(f"Expected 'lo:hi' or 'lo:hi:step', got {text!r}")
    return parts


def parse_list(text: str, cast: Callable[[str], Any] = int) -> List[Any]:
    """Split a comma-separated list, e.g. ``50,75,100``."""
    return [cast(part) for part in text.split(",") if part.strip()]


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Render rows as fixed-width text columns."""
    def cell(value: Any) -> str:
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    rendered = [[cell(value) for value in row] for row in rows]
    widths = [
        max([len(header)] + [len(row[i]) for row in rendered])
        for i, header in enumerate(headers)
    ]
    lines = ["  ".join(header.rjust(width) for header, width in zip(headers, widths))]
    lines.append("  ".join("-" * width for width in widths))
    for row in rendered:
        lines.append("  ".join(value.rjust(width) for value, width in zip(row, widths)))
    return "\n".join(lines)
