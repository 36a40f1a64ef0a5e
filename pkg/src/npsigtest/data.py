"""Dataset container, column-role schema, CSV ingestion, and standardization.

A dataset holds a response vector ``y``, a matrix ``w`` of covariates kept
under the null hypothesis, and a matrix ``x`` of covariates under test.
Columns are either continuous (finite reals, rescaled before smoothing) or
discrete (real-coded labels compared by exact equality, never rescaled).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files, schemas, or dataset contents."""


class ColumnKind(enum.Enum):
    CONTINUOUS = "cont"
    DISCRETE = "disc"


def _as_kind_tuple(kinds, count: int, what: str) -> tuple[ColumnKind, ...]:
    kinds = tuple(kinds)
    if len(kinds) != count:
        raise DataError(f"{what}: expected {count} column kinds, got {len(kinds)}")
    for k in kinds:
        if not isinstance(k, ColumnKind):
            raise DataError(f"{what}: invalid column kind {k!r}")
    return kinds


def _check_finite(arr: np.ndarray, what: str) -> None:
    if arr.size and not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        where = f"row {int(bad[0])}" + (f", column {int(bad[1])}" if len(bad) > 1 else "")
        raise DataError(f"{what}: non-finite entry at {where}")


@dataclass(frozen=True)
class Dataset:
    """Immutable (y, w, x) sample with per-column kinds.

    The floor ``n >= 2`` is enforced here; each statistic imposes its own
    larger floor (pair statistics need 3, four-index arrangements 5, the
    six-index variance estimator 7) at the point of use.
    """

    y: np.ndarray
    w: np.ndarray
    x: np.ndarray
    w_kinds: tuple[ColumnKind, ...]
    x_kinds: tuple[ColumnKind, ...]

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        w = np.ascontiguousarray(np.atleast_2d(np.asarray(self.w, dtype=float)))
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else x.reshape(len(y), 0)
        x = np.ascontiguousarray(x)
        if y.ndim != 1:
            raise DataError("y must be a vector")
        n = len(y)
        if n < 2:
            raise DataError("need at least 2 observations")
        if w.shape[0] != n or x.shape[0] != n:
            raise DataError(
                f"row mismatch: y has {n}, w has {w.shape[0]}, x has {x.shape[0]}"
            )
        if w.shape[1] < 1:
            raise DataError("w must have at least one column")
        _check_finite(y, "y")
        _check_finite(w, "w")
        _check_finite(x, "x")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(
            self, "w_kinds", _as_kind_tuple(self.w_kinds, w.shape[1], "w_kinds")
        )
        object.__setattr__(
            self, "x_kinds", _as_kind_tuple(self.x_kinds, x.shape[1], "x_kinds")
        )
        for arr in (y, w, x):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.w.shape[1]

    @property
    def q(self) -> int:
        return self.x.shape[1]

    @property
    def p_cont(self) -> int:
        """Number of continuous w columns (the effective smoothing dimension)."""
        return sum(k is ColumnKind.CONTINUOUS for k in self.w_kinds)

    def _split(self, m: np.ndarray, kinds) -> tuple[np.ndarray, np.ndarray]:
        cont = [i for i, k in enumerate(kinds) if k is ColumnKind.CONTINUOUS]
        disc = [i for i, k in enumerate(kinds) if k is ColumnKind.DISCRETE]
        return m[:, cont], m[:, disc]

    def w_split(self) -> tuple[np.ndarray, np.ndarray]:
        """(continuous w columns, discrete w columns)."""
        return self._split(self.w, self.w_kinds)

    def x_split(self) -> tuple[np.ndarray, np.ndarray]:
        return self._split(self.x, self.x_kinds)


def all_continuous(count: int) -> tuple[ColumnKind, ...]:
    return (ColumnKind.CONTINUOUS,) * count


@dataclass(frozen=True)
class ScaledDataset:
    """A dataset whose continuous covariate columns have unit sample sd.

    ``w_scales`` / ``x_scales`` record the divisors (1.0 for discrete
    columns); ``y`` passes through untouched since studentized statistics
    are invariant to its scale.
    """

    dataset: Dataset
    w_scales: np.ndarray
    x_scales: np.ndarray

    @property
    def n(self) -> int:
        return self.dataset.n


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV column names onto the y/w/x roles and marks discrete columns."""

    y: str
    w: tuple[str, ...]
    x: tuple[str, ...]
    discrete: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "discrete", frozenset(self.discrete))
        roles = [self.y, *self.w, *self.x]
        if len(set(roles)) != len(roles):
            raise DataError("y, w, and x column names must be disjoint")
        if not self.w:
            raise DataError("schema must name at least one w column")
        unknown = self.discrete - set(roles[1:])
        if unknown:
            raise DataError(
                f"discrete columns not among w/x: {sorted(unknown)}"
            )

    def kinds_for(self, names: tuple[str, ...]) -> tuple[ColumnKind, ...]:
        return tuple(
            ColumnKind.DISCRETE if c in self.discrete else ColumnKind.CONTINUOUS
            for c in names
        )


def load_dataset(path: str | Path, schema: ColumnSchema) -> Dataset:
    """Read a delimited numeric table with a header row into a Dataset.

    Errors name the offending row (1-based, excluding the header) and column.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            header = [c.strip() for c in header]
            rows = [row for row in reader if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    wanted = [schema.y, *schema.w, *schema.x]
    positions = {}
    for name in wanted:
        if name not in header:
            raise DataError(f"missing column '{name}' in {path}")
        positions[name] = header.index(name)

    n = len(rows)
    values = {name: np.empty(n) for name in wanted}
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(
                f"{path}: row {r + 1} has {len(row)} fields, header has {len(header)}"
            )
        for name in wanted:
            cell = row[positions[name]].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell at row {r + 1}, column '{name}': {cell!r}"
                ) from None
            if math.isnan(v) or math.isinf(v):
                raise DataError(
                    f"{path}: non-finite value at row {r + 1}, column '{name}'"
                )
            values[name][r] = v

    w = np.column_stack([values[c] for c in schema.w]) if schema.w else np.empty((n, 0))
    if schema.x:
        x = np.column_stack([values[c] for c in schema.x])
    else:
        x = np.empty((n, 0))
    return Dataset(
        y=values[schema.y],
        w=w,
        x=x,
        w_kinds=schema.kinds_for(schema.w),
        x_kinds=schema.kinds_for(schema.x),
    )


def save_dataset(path: str | Path, dataset: Dataset, schema: ColumnSchema) -> None:
    """Write a Dataset back to CSV using shortest round-trip float formatting."""
    names = [schema.y, *schema.w, *schema.x]
    if len(schema.w) != dataset.p or len(schema.x) != dataset.q:
        raise DataError("schema column counts do not match dataset")
    cols = [dataset.y] + [dataset.w[:, j] for j in range(dataset.p)] + [
        dataset.x[:, j] for j in range(dataset.q)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for r in range(dataset.n):
            writer.writerow([repr(float(col[r])) for col in cols])


def _scale_columns(m: np.ndarray, kinds) -> tuple[np.ndarray, np.ndarray]:
    scales = np.ones(m.shape[1])
    out = m.copy()
    for j, kind in enumerate(kinds):
        if kind is not ColumnKind.CONTINUOUS:
            continue
        sd = float(np.std(m[:, j], ddof=1))
        if sd <= 0.0:
            raise DataError(
                f"continuous column {j} has zero sample standard deviation; "
                "mark it discrete or remove it"
            )
        scales[j] = sd
        out[:, j] = m[:, j] / sd
    return out, scales


def standardize(d: Dataset) -> ScaledDataset:
    """Divide continuous w/x columns by their sample sd (n-1 denominator)."""
    w_scaled, w_scales = _scale_columns(d.w, d.w_kinds)
    x_scaled, x_scales = _scale_columns(d.x, d.x_kinds)
    scaled = Dataset(
        y=d.y, w=w_scaled, x=x_scaled, w_kinds=d.w_kinds, x_kinds=d.x_kinds
    )
    return ScaledDataset(dataset=scaled, w_scales=w_scales, x_scales=x_scales)
