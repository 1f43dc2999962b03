"""Multi-index lattice arithmetic.

A field over the box {1..N_1} x ... x {1..N_r} is stored as a dense numpy
array of shape (N_1, ..., N_r); the lattice point k = (k_1, ..., k_r) lives at
array position (k_1 - 1, ..., k_r - 1).  Linearization is C order (last axis
fastest), which is also the row order of the CSV format.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConvergenceMode",
    "FieldError",
    "MultiIndex",
    "DEFAULT_MAX_POINTS",
    "box_size",
    "check_field",
    "prefix_sums",
    "increment",
    "is_monotone",
    "level_set",
    "dyadic_shells",
    "shell_labels",
    "index_grids",
    "field_to_csv",
    "field_from_csv",
    "write_field_csv",
    "read_field_csv",
]

DEFAULT_MAX_POINTS = 2**24

MultiIndex = tuple[int, ...]


class FieldError(ValueError):
    """Raised for malformed fields or a numerical blow-up inside a field."""


class ConvergenceMode(str, enum.Enum):
    MAX = "max"  # |n| -> oo
    MIN = "min"  # min(n_1, ..., n_r) -> oo


def box_size(upper: Sequence[int]) -> int:
    """Number of lattice points in {k : k <= upper}, i.e. |upper|."""
    upper = as_index(upper)
    return math.prod(upper)


def as_index(n: Iterable[int]) -> MultiIndex:
    n = tuple(int(c) for c in n)
    if not n:
        raise FieldError("a multi-index needs at least one coordinate")
    if any(c < 1 for c in n):
        raise FieldError(f"multi-index {n} has a coordinate below 1")
    return n


def check_field(field: np.ndarray, max_points: int = DEFAULT_MAX_POINTS) -> np.ndarray:
    field = np.asarray(field)
    if field.ndim == 0 or field.size == 0:
        raise FieldError("field must be a non-empty array with at least one axis")
    if field.size > max_points:
        raise FieldError(f"field has {field.size} points, cap is {max_points}")
    if field.dtype.kind == "f" and not np.all(np.isfinite(field)):
        bad = _first_index(~np.isfinite(field))
        raise FieldError(f"non-finite value at {bad}")
    return field


def _first_index(mask: np.ndarray) -> MultiIndex:
    flat = int(np.flatnonzero(mask.ravel())[0])
    return tuple(int(i) + 1 for i in np.unravel_index(flat, mask.shape))


def index_grids(shape: Sequence[int]) -> tuple[np.ndarray, ...]:
    """Open mesh of 1-based coordinates, one broadcastable int64 array per axis."""
    r = len(shape)
    grids = []
    for axis, n in enumerate(shape):
        g = np.arange(1, n + 1, dtype=np.int64)
        g = g.reshape((1,) * axis + (n,) + (1,) * (r - axis - 1))
        grids.append(g)
    return tuple(grids)


def _compensated_cumsum(values: np.ndarray, axis: int) -> np.ndarray:
    # Neumaier running sum along `axis`, vectorized over the orthogonal hyperplane.
    moved = np.moveaxis(values, axis, 0)
    out = np.empty_like(moved)
    total = np.zeros(moved.shape[1:], dtype=moved.dtype)
    comp = np.zeros_like(total)
    for i in range(moved.shape[0]):
        x = moved[i]
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp += np.where(big, (total - t) + x, (x - t) + total)
        total = t
        out[i] = total + comp
    return np.moveaxis(out, 0, axis)


def prefix_sums(field: np.ndarray) -> np.ndarray:
    """Rectangular partial sums S_n = sum_{k <= n} field[k].

    One sweep per axis.  Integer fields are summed exactly in int64; float
    fields use compensated summation so that ``increment(prefix_sums(f))``
    reproduces ``f`` to ~1e-16 relative.
    """
    field = check_field(field)
    if field.dtype.kind in "iub":
        out = field.astype(np.int64)
        for axis in range(out.ndim):
            out = np.cumsum(out, axis=axis)
        return out
    out = field.astype(np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        for axis in range(out.ndim):
            out = _compensated_cumsum(out, axis)
    if not np.all(np.isfinite(out)):
        raise FieldError(f"prefix sum overflowed at {_first_index(~np.isfinite(out))}")
    return out


def increment(field: np.ndarray) -> np.ndarray:
    """Inclusion-exclusion increment Delta[f]_n = sum_{m in {0,1}^r} (-1)^{|m|} f_{n-m}.

    Values at indices with a zero coordinate are taken as 0.  Applied as the
    composition of r backward differences, which expands to the 2^r-term sum.
    """
    field = check_field(field)
    out = field.astype(np.int64) if field.dtype.kind in "iub" else field.astype(np.float64)
    for axis in range(out.ndim):
        out = np.diff(out, axis=axis, prepend=0)
    return out


def increment_at(field: np.ndarray, n: Sequence[int]) -> float:
    """Direct 2^r-term evaluation of Delta[f] at one index (reference path)."""
    n = as_index(n)
    total = 0
    for m in product((0, 1), repeat=len(n)):
        k = tuple(ni - mi for ni, mi in zip(n, m))
        if min(k) == 0:
            continue
        total += (-1) ** sum(m) * field[tuple(c - 1 for c in k)]
    return total


@dataclass(frozen=True)
class MonotoneReport:
    monotone: bool
    violation: tuple[MultiIndex, MultiIndex] | None = None

    def __bool__(self) -> bool:
        return self.monotone


def is_monotone(field: np.ndarray) -> MonotoneReport:
    """True iff field[k] <= field[n] whenever k <= n coordinatewise.

    Only neighbours along each axis are compared; transitivity covers the rest.
    The reported violation is the pair (k, k + e_axis) with the smallest
    linear position of k, ties broken by axis.
    """
    field = check_field(field)
    best = None
    for axis in range(field.ndim):
        d = np.diff(field, axis=axis)
        bad = d < 0
        if not bad.any():
            continue
        flat_idx = np.flatnonzero(bad.ravel())[0]
        pos = np.unravel_index(flat_idx, bad.shape)
        lin = int(np.ravel_multi_index(pos, field.shape))
        if best is None or (lin, axis) < best[:2]:
            best = (lin, axis, tuple(int(p) + 1 for p in pos))
    if best is None:
        return MonotoneReport(True)
    _, axis, k = best
    n = tuple(c + (1 if i == axis else 0) for i, c in enumerate(k))
    return MonotoneReport(False, (k, n))


def level_set(spec, threshold: float, bounding: Sequence[int] | None = None) -> list[MultiIndex]:
    """The set A = {n in bounding box : b_n <= threshold}.

    ``spec`` is either an array of b_n over the bounding box or anything with
    a ``values(shape)`` method (a NormalizationSpec).  Raises FieldError when
    a point on an outer face satisfies the threshold, since the level set may
    then leak outside the box.
    """
    if threshold <= 0:
        raise FieldError("threshold must be positive")
    if hasattr(spec, "values"):
        if bounding is None:
            raise FieldError("a bounding box is required with a normalization spec")
        values = spec.values(as_index(bounding))
    else:
        values = spec
    values = check_field(values)
    mask = values <= threshold
    for axis, n in enumerate(values.shape):
        face = np.take(mask, n - 1, axis=axis)
        if face.any():
            raise FieldError(
                f"level set touches the outer face n_{axis + 1} = {n}; enlarge the bounding box"
            )
    return [tuple(int(c) + 1 for c in pos) for pos in np.argwhere(mask)]


def shell_labels(shape: Sequence[int]) -> np.ndarray:
    """t = floor(log2 |n|) at every lattice point of the box."""
    sizes = np.ones(tuple(shape), dtype=np.int64)
    for g in index_grids(shape):
        sizes = sizes * g
    # exact floor(log2) for positive int64 via frexp on exactly representable values
    _, exp = np.frexp(sizes.astype(np.float64))
    return (exp - 1).astype(np.int64)


def dyadic_shells(upper: Sequence[int]) -> list[tuple[int, list[MultiIndex]]]:
    """Partition of the box into shells {n : 2^t <= |n| < 2^(t+1)}, nonempty shells only."""
    upper = as_index(upper)
    labels = shell_labels(upper)
    shells = []
    for t in range(int(labels.max()) + 1):
        pts = np.argwhere(labels == t)
        if len(pts):
            shells.append((t, [tuple(int(c) + 1 for c in p) for p in pts]))
    return shells


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def field_to_csv(field: np.ndarray) -> str:
    field = check_field(field)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"n{i + 1}" for i in range(field.ndim)] + ["value"])
    for pos in np.ndindex(field.shape):
        writer.writerow([str(p + 1) for p in pos] + [_fmt(field[pos])])
    return buf.getvalue()


def field_from_csv(text: str) -> np.ndarray:
    """Parse the ``n1,...,nr,value`` format; every box point must appear exactly once."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FieldError("empty CSV")
    header, body = rows[0], [row for row in rows[1:] if row]
    if len(header) < 2 or header[-1].strip() != "value":
        raise FieldError("CSV header must be coords...,value")
    r = len(header) - 1
    if not body:
        raise FieldError("CSV has no data rows")
    coords = []
    vals = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != r + 1:
            raise FieldError(f"line {lineno}: expected {r + 1} columns")
        try:
            coords.append(as_index(int(c) for c in row[:r]))
        except ValueError as exc:
            raise FieldError(f"line {lineno}: {exc}") from exc
        vals.append(row[r].strip())
    is_int = all(_looks_int(v) for v in vals)
    shape = tuple(max(c[i] for c in coords) for i in range(r))
    if len(coords) != math.prod(shape) or len(set(coords)) != len(coords):
        raise FieldError("CSV does not cover its bounding box exactly once")
    out = np.zeros(shape, dtype=np.int64 if is_int else np.float64)
    for c, v in zip(coords, vals):
        out[tuple(x - 1 for x in c)] = int(v) if is_int else float(v)
    return check_field(out)


def _looks_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def write_field_csv(field: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(field_to_csv(field))


def read_field_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return field_from_csv(fh.read())
