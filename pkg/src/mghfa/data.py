"""Incomplete data handling: masked matrices, missingness patterns, CSV I/O,
and the rank-block missing-at-random removal mechanism used by the
simulation pipeline.

The mask is authoritative: values stored at masked-off cells are arbitrary
placeholders and are never read by any downstream computation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataError",
    "DataMatrix",
    "ObservedPattern",
    "MarSpec",
    "read_csv",
    "write_csv",
    "pattern_of",
    "apply_mar",
]

DEFAULT_MISSING_TOKENS = ("", "NA")


class DataError(ValueError):
    """Raised for malformed input data or violated data invariants."""


@dataclass(frozen=True)
class ObservedPattern:
    """Sorted index lists of observed and missing coordinates of one row."""

    observed_idx: tuple
    missing_idx: tuple

    @property
    def n_observed(self) -> int:
        return len(self.observed_idx)

    @property
    def fully_observed(self) -> bool:
        return not self.missing_idx


class DataMatrix:
    """An n x p real matrix with a per-cell observedness mask.

    Immutable after construction.  Rows with identical masks share one
    canonical :class:`ObservedPattern` object, which downstream code uses to
    group rows for per-pattern computations.
    """

    def __init__(self, values, mask=None, column_names=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        if mask is None:
            mask = np.isfinite(values)
        mask = np.array(mask, dtype=bool)
        if mask.shape != values.shape:
            raise DataError("mask shape must match values shape")
        n, p = values.shape
        if column_names is None:
            column_names = [f"x{j + 1}" for j in range(p)]
        column_names = list(column_names)
        if len(column_names) != p:
            raise DataError("column_names length must equal the number of columns")

        rows_wo_obs = np.flatnonzero(~mask.any(axis=1))
        if rows_wo_obs.size:
            raise DataError(f"row {rows_wo_obs[0]} has no observed cells")
        if not np.all(np.isfinite(values[mask])):
            i, j = np.argwhere(mask & ~np.isfinite(values))[0]
            raise DataError(f"non-finite observed value at row {i}, column '{column_names[j]}'")

        values.flags.writeable = False
        mask.flags.writeable = False
        self.values = values
        self.mask = mask
        self.column_names = column_names
        self._pattern_cache: dict[bytes, ObservedPattern] = {}
        self._groups = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def complete(self) -> bool:
        return bool(self.mask.all())

    def pattern_of(self, row: int) -> ObservedPattern:
        """Canonical observed/missing pattern of one row (cached by mask)."""
        key = self.mask[row].tobytes()
        pat = self._pattern_cache.get(key)
        if pat is None:
            obs = tuple(int(j) for j in np.flatnonzero(self.mask[row]))
            mis = tuple(int(j) for j in np.flatnonzero(~self.mask[row]))
            pat = ObservedPattern(obs, mis)
            self._pattern_cache[key] = pat
        return pat

    def pattern_groups(self):
        """List of (pattern, row-index array) pairs covering all rows."""
        if self._groups is None:
            by_key: dict[bytes, list[int]] = {}
            for i in range(self.n):
                by_key.setdefault(self.mask[i].tobytes(), []).append(i)
            groups = []
            for key, rows in by_key.items():
                pat = self.pattern_of(rows[0])
                groups.append((pat, np.asarray(rows, dtype=np.intp)))
            self._groups = groups
        return self._groups


def pattern_of(row: int, d: DataMatrix) -> ObservedPattern:
    """Observed/missing index lists for one row of `d`."""
    return d.pattern_of(row)


def read_csv(path, missing_tokens=DEFAULT_MISSING_TOKENS) -> DataMatrix:
    """Read a rectangular CSV with a header row into a :class:`DataMatrix`.

    Cells whose stripped text matches any missing token become missing;
    everything else must parse as a real number.
    """
    missing = {t for t in missing_tokens}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        p = len(header)
        values, mask = [], []
        for i, row in enumerate(reader):
            if len(row) != p:
                raise DataError(f"{path}: row {i + 1} has {len(row)} cells, expected {p}")
            vrow, mrow = [], []
            for j, cell in enumerate(row):
                cell = cell.strip()
                if cell in missing:
                    vrow.append(np.nan)
                    mrow.append(False)
                else:
                    try:
                        vrow.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: cannot parse '{cell}' at row {i + 1}, column '{header[j]}'"
                        ) from None
                    mrow.append(True)
            if not any(mrow):
                raise DataError(f"{path}: row {i + 1} is fully missing")
            values.append(vrow)
            mask.append(mrow)
    if not values:
        raise DataError(f"{path}: no data rows")
    return DataMatrix(np.asarray(values), np.asarray(mask), header)


def write_csv(d: DataMatrix, path, missing_token="NA") -> None:
    """Write `d` as CSV; observed reals at 17 significant digits, missing cells
    as `missing_token`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(d.column_names)
        for i in range(d.n):
            writer.writerow(
                [
                    format(d.values[i, j], ".17g") if d.mask[i, j] else missing_token
                    for j in range(d.p)
                ]
            )


def _largest_remainder(proportions, total: int) -> np.ndarray:
    """Integer apportionment of `total` by `proportions` (largest remainder)."""
    proportions = np.asarray(proportions, dtype=float)
    raw = proportions / proportions.sum() * total
    counts = np.floor(raw).astype(int)
    remainder = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:remainder]] += 1
    return counts


# Per-block removal proportions of the three rank blocks for each pattern.
_PATTERN_WEIGHTS = {1: (2, 10, 3), 2: (10, 2, 3), 3: (3, 2, 10)}


@dataclass(frozen=True)
class MarSpec:
    """A missing-at-random removal plan: rank-block counts applied per column."""

    pattern: int
    rate: float
    block_counts: tuple

    def __post_init__(self):
        if self.pattern not in _PATTERN_WEIGHTS:
            raise DataError(f"pattern must be 1, 2 or 3, got {self.pattern}")
        if not 0.0 <= self.rate < 1.0:
            raise DataError(f"rate must lie in [0, 1), got {self.rate}")
        if len(self.block_counts) != 3 or any(c < 0 for c in self.block_counts):
            raise DataError("block_counts must be three nonnegative integers")

    @classmethod
    def for_data(cls, pattern: int, rate: float, n: int) -> "MarSpec":
        """Block counts for n rows at the given overall per-column rate.

        The per-block proportions of each pattern are scaled to round(n*rate)
        removals per column with largest-remainder rounding.
        """
        if pattern not in _PATTERN_WEIGHTS:
            raise DataError(f"pattern must be 1, 2 or 3, got {pattern}")
        total = int(round(n * rate))
        counts = _largest_remainder(_PATTERN_WEIGHTS[pattern], total)
        return cls(pattern, rate, tuple(int(c) for c in counts))


def apply_mar(d: DataMatrix, spec: MarSpec, rng: np.random.Generator) -> DataMatrix:
    """Remove cells from a complete matrix by the rank-block MAR mechanism.

    For each column c the rows are ranked by column c in descending order and
    split into three consecutive blocks; within block k, ``block_counts[k]``
    entries of column c+1 (wrapping to the first column after the last) are
    removed uniformly at random.  Rows that would lose their last observed
    cell are excluded from the draw, so every row keeps at least one
    observed value while removal counts stay exact.
    """
    if not d.complete:
        raise DataError("apply_mar requires a complete data matrix")
    n, p = d.n, d.p
    block = -(-n // 3)  # ceil(n/3); the last block absorbs the remainder
    sizes = (block, block, n - 2 * block)
    for k, c in enumerate(spec.block_counts):
        if c > sizes[k]:
            raise DataError(f"block_counts[{k}]={c} exceeds block size {sizes[k]}")

    values = np.array(d.values)
    mask = np.ones((n, p), dtype=bool)
    for c in range(p):
        target = (c + 1) % p
        ranked = np.argsort(-d.values[:, c], kind="stable")
        blocks = (ranked[:block], ranked[block : 2 * block], ranked[2 * block :])
        for k, rows in enumerate(blocks):
            count = spec.block_counts[k]
            if count == 0:
                continue
            eligible = rows[mask[rows].sum(axis=1) >= 2]
            if eligible.size < count:
                raise DataError(
                    f"cannot remove {count} cells from block {k} of column "
                    f"{target + 1} without emptying a row"
                )
            hit = rng.choice(eligible, size=count, replace=False)
            mask[hit, target] = False
            values[hit, target] = np.nan
    return DataMatrix(values, mask, d.column_names)
