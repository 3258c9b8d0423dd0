"""Shared numerical and I/O helpers.

Internal module: everything here is an implementation detail of the public
modules and may change without notice.
"""

from __future__ import annotations

import csv
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "format_float",
    "write_csv",
    "as_float_array",
    "trailing_window_slice",
]


def format_float(value: float) -> str:
    """Render a float with the shortest representation that round-trips.

    ``repr`` of a Python float is guaranteed to parse back to the identical
    IEEE-754 double, which is what makes emitted CSV files byte-stable across
    runs and platforms.  numpy scalars are converted first so their wrapper
    repr (``np.float64(...)``) never leaks into output files.
    """
    return repr(float(value))


def write_csv(stream: IO[str], header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    """Write rows to ``stream`` with deterministic float formatting.

    Floats go through :func:`format_float`; ints are written as plain decimal
    digits; ``None`` becomes the empty field; everything else is written
    verbatim.  The line terminator is fixed to ``"\\n"`` independent of
    platform so identical inputs yield byte-identical files.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        formatted: list[str] = []
        for cell in row:
            if cell is None:
                formatted.append("")
            elif isinstance(cell, (bool, np.bool_)):
                formatted.append(str(bool(cell)))
            elif isinstance(cell, (int, np.integer)):
                formatted.append(str(int(cell)))
            elif isinstance(cell, (float, np.floating)):
                formatted.append(format_float(cell))
            else:
                formatted.append(str(cell))
        writer.writerow(formatted)


def as_float_array(values, name: str) -> np.ndarray:
    """Convert to a float64 ndarray, rejecting non-numeric input."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def trailing_window_slice(n: int, fraction: float) -> slice:
    """Slice selecting the trailing ``fraction`` of ``n`` samples (at least one)."""
    if not 0.0 < fraction <= 1.0:
        raise InputError("window fraction must lie in (0, 1]")
    start = min(n - 1, int(np.floor(n * (1.0 - fraction))))
    return slice(start, n)
