"""
Point-Cloud Loaders for the multi-manifold toolkit.
Reads comma-separated files with a header and whitespace-separated xyz files.
"""
import logging
import re
from pathlib import Path
from typing import List, Literal, Union

import numpy as np
import pandas as pd

from ..core import MultiManifoldError, PointCloud

logger = logging.getLogger(__name__)

CloudFormat = Literal["csv", "xyz"]

_NUMBERED_COLUMN = re.compile(r"^x(\d+)$")
_PARSER_LINE = re.compile(r"line (\d+)")


def coordinate_columns(header: List[str]) -> List[str]:
    """Coordinate columns of a csv header: x1..xD in order, else x, y, z."""
    numbered = sorted(
        (int(match.group(1)), name)
        for name in header
        if (match := _NUMBERED_COLUMN.match(name.strip())) is not None
    )
    if numbered:
        indices = [index for index, _ in numbered]
        if indices != list(range(1, len(indices) + 1)):
            raise MultiManifoldError(
                f"Coordinate columns must run x1..x{len(indices)} without gaps", "parse-error", {"line": 1}
            )
        return [name for _, name in numbered]
    stripped = [name.strip() for name in header]
    if all(axis in stripped for axis in ("x", "y", "z")):
        return [header[stripped.index(axis)] for axis in ("x", "y", "z")]
    raise MultiManifoldError("No coordinate columns (x1..xD or x,y,z) in header", "parse-error", {"line": 1})


def _read_frame(path: Path, fmt: CloudFormat) -> pd.DataFrame:
    options = dict(dtype=str, keep_default_na=False, na_filter=False, skip_blank_lines=True)
    try:
        if fmt == "csv":
            return pd.read_csv(path, **options)
        return pd.read_csv(path, sep=r"\s+", header=None, **options)
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        context = {"line": int(match.group(1))} if match else {}
        raise MultiManifoldError(f"Inconsistent field count in {path}", "ragged-rows", context) from e
    except pd.errors.EmptyDataError:
        return pd.DataFrame()


def _to_float(block: np.ndarray, first_line: int) -> np.ndarray:
    try:
        return block.astype(np.float64)
    except ValueError:
        for row, values in enumerate(block):
            try:
                values.astype(np.float64)
            except ValueError as e:
                raise MultiManifoldError(
                    f"Unparseable value in row {list(values)}", "parse-error", {"line": first_line + row}
                ) from e
        raise


def load_cloud(path: Union[str, Path], fmt: CloudFormat = "csv") -> PointCloud:
    """Read a point cloud; errors carry the 1-based line number of the offending row."""
    path = Path(path)
    if not path.is_file():
        raise MultiManifoldError(f"Input file not found: {path}", "missing-input", {"path": str(path)})
    if fmt not in ("csv", "xyz"):
        raise MultiManifoldError(f"Unknown cloud format {fmt!r}", "parse-error")

    frame = _read_frame(path, fmt)
    first_line = 2 if fmt == "csv" else 1
    if fmt == "csv":
        frame = frame[coordinate_columns([str(name) for name in frame.columns])]
    if frame.shape[0] == 0:
        raise MultiManifoldError(f"No points in {path}", "empty-set")

    # short rows come back padded with empty strings or NaN
    raw = frame.to_numpy(dtype=object)
    short = np.array([any(value is None or value == "" or value != value for value in row) for row in raw])
    if short.any():
        raise MultiManifoldError(
            f"Row has fewer fields than the header in {path}", "ragged-rows",
            {"line": first_line + int(np.flatnonzero(short)[0])},
        )

    points = _to_float(raw.astype(str), first_line)
    finite = np.all(np.isfinite(points), axis=1)
    if not finite.all():
        raise MultiManifoldError(
            f"Non-finite coordinate in {path}", "non-finite", {"line": first_line + int(np.flatnonzero(~finite)[0])}
        )
    logger.info("Loaded %d points in R^%d from %s", points.shape[0], points.shape[1], path)
    return PointCloud(points)
