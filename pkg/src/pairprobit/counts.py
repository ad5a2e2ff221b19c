"""Pairwise contingency counts.

Groups the observations by category pair so the likelihood and score can
be evaluated once per distinct cell instead of once per row.  The tensor
is dense (pair-major, K x K blocks): with the small K used in practice
nearly every cell is occupied and dense blocks keep the score loops
vectorized.
"""

from dataclasses import dataclass

import numpy as np

from .model import ModelDims, iter_pairs


@dataclass(frozen=True, eq=False)
class OrdinalDataset:
    """n x q matrix of 1-based integer categories, each in 1..k."""

    rows: np.ndarray
    k: int

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
        if rows.shape[0] < 1:
            raise ValueError("dataset must contain at least one observation")
        if rows.shape[1] < 2:
            raise ValueError("dataset must contain at least two margins")
        if not np.issubdtype(rows.dtype, np.integer):
            if not np.all(rows == np.floor(rows)):
                raise ValueError("categories must be integers")
            rows = rows.astype(np.int64)
        bad = (rows < 1) | (rows > self.k)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValueError(
                f"category {rows[i, j]} at row {i + 1}, column {j + 1} "
                f"outside 1..{self.k}")
        object.__setattr__(self, "rows", rows.astype(np.int64))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def q(self) -> int:
        return self.rows.shape[1]

    def dims(self) -> ModelDims:
        return ModelDims(q=self.q, k=self.k, n=self.n)


@dataclass(frozen=True, eq=False)
class PairCounts:
    """Co-occurrence tensor: counts[pair, l-1, m-1] = #{Y_r = l, Y_s = m}."""

    counts: np.ndarray
    dims: ModelDims

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        expected = (self.dims.n_pairs, self.dims.k, self.dims.k)
        if counts.shape != expected:
            raise ValueError(f"counts shape {counts.shape}, expected {expected}")
        object.__setattr__(self, "counts", counts)


def compute_counts(data: OrdinalDataset, dims: ModelDims) -> PairCounts:
    """Tally co-occurrences for every margin pair.

    Exact tally: each pair's K x K block sums to n.  Row order does not
    matter.
    """
    if data.q != dims.q or data.k != dims.k or data.n != dims.n:
        raise ValueError(
            f"dataset shape ({data.n}, {data.q}, k={data.k}) does not match "
            f"dims {dims}")
    k = dims.k
    out = np.empty((dims.n_pairs, k, k), dtype=np.int64)
    codes = data.rows - 1
    for p, r, s in iter_pairs(dims.q):
        flat = codes[:, r - 1] * k + codes[:, s - 1]
        out[p] = np.bincount(flat, minlength=k * k).reshape(k, k)
    return PairCounts(out, dims)


def margin_tallies(data: OrdinalDataset) -> np.ndarray:
    """Per-margin category counts, shape (q, k)."""
    out = np.empty((data.q, data.k), dtype=np.int64)
    for j in range(data.q):
        out[j] = np.bincount(data.rows[:, j] - 1, minlength=data.k)
    return out
