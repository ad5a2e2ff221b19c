"""Pairwise log-likelihood and its closed-form score vector.

Everything here is evaluated from the grouped (count-weighted) form: the
likelihood of a parameter vector needs one K x K cell-probability table
per margin pair, and the score needs three more derivative grids per pair,
so the kernel cost is O(q^2 K^2) regardless of the sample size.

Per-observation and per-pair (zero-padded) scores are exposed separately
because the variability and sensitivity estimators of the Godambe matrix
are built from those finer contributions.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import gauss
from .counts import OrdinalDataset, PairCounts
from .model import (ModelDims, check_theta, iter_pairs, pair_index,
                    threshold_index, unpack_theta)

# Cell probabilities are floored here inside logs and reciprocals; line
# searches can wander into near-degenerate parameter regions where an
# occupied cell underflows, and the evaluation must survive that.
PROB_FLOOR = 1e-300


@dataclass
class EvalDiagnostics:
    """Mutable counters threaded through likelihood/score evaluations."""

    underflow_cells: int = 0


def _note_underflow(n_floored: int, diag):
    if n_floored == 0:
        return
    if diag is None:
        warnings.warn(
            f"{n_floored} occupied cells had probabilities below "
            f"{PROB_FLOOR:g} and were floored", RuntimeWarning, stacklevel=3)
    else:
        diag.underflow_cells += n_floored


class CellProbCache:
    """All K x K rectangle-probability tables at a fixed theta.

    ``probs[pair_index(r, s), l-1, m-1]`` is pr(Y_r = l, Y_s = m), floored
    at PROB_FLOOR so every entry is positive.
    """

    def __init__(self, theta, dims: ModelDims):
        theta = check_theta(theta, dims)
        corr, thr = unpack_theta(theta, dims)
        grids = [thr.full_grid(j) for j in range(1, dims.q + 1)]
        probs = np.empty((dims.n_pairs, dims.k, dims.k))
        for p, r, s in iter_pairs(dims.q):
            probs[p] = gauss.pair_probs(grids[r - 1], grids[s - 1], corr.rhos[p])
        self.probs = np.maximum(probs, PROB_FLOOR)


def cell_prob(theta, dims: ModelDims, r: int, s: int, l: int, m: int) -> float:
    """Rectangle probability pr(Y_r = l, Y_s = m) at theta."""
    if not (1 <= r < s <= dims.q):
        raise ValueError(f"invalid margin pair ({r}, {s})")
    if not (1 <= l <= dims.k and 1 <= m <= dims.k):
        raise ValueError(f"invalid levels ({l}, {m}) for k={dims.k}")
    corr, thr = unpack_theta(theta, dims)
    gr = thr.full_grid(r)
    gs = thr.full_grid(s)
    return gauss.rect_prob(gr[l - 1], gr[l], gs[m - 1], gs[m],
                           corr.rhos[pair_index(r, s, dims.q)])


def pairwise_loglik(theta, counts: PairCounts, diag=None) -> float:
    """Count-weighted pairwise log-likelihood."""
    dims = counts.dims
    theta = check_theta(theta, dims)
    corr, thr = unpack_theta(theta, dims)
    grids = [thr.full_grid(j) for j in range(1, dims.q + 1)]
    total = 0.0
    n_floored = 0
    for p, r, s in iter_pairs(dims.q):
        cnt = counts.counts[p]
        probs = gauss.pair_probs(grids[r - 1], grids[s - 1], corr.rhos[p])
        n_floored += int(np.sum((cnt > 0) & (probs < PROB_FLOOR)))
        total += float(np.sum(cnt * np.log(np.maximum(probs, PROB_FLOOR))))
    _note_underflow(n_floored, diag)
    return total


def _pair_score_parts(cnt, tables):
    """Per-pair score pieces from one pair's corner tables.

    Returns (loglik, d/drho, d/da(first margin), d/da(second margin),
    number of floored occupied cells).
    """
    probs, dprob_drho, ex, ey = tables
    k = probs.shape[0]
    floored = int(np.sum((cnt > 0) & (probs < PROB_FLOOR)))
    probs = np.maximum(probs, PROB_FLOOR)
    ll = float(np.sum(cnt * np.log(probs)))
    w = cnt / probs
    s_rho = float(np.sum(w * dprob_drho))
    # ex rows 1..K-1 are the finite cuts of the first margin; differencing
    # along the other margin gives the bracketed conditional-CDF terms.
    dex = ex[:, 1:] - ex[:, :-1]          # (K+1, K)
    dey = ey[1:, :] - ey[:-1, :]          # (K, K+1)
    hi_x = np.sum(dex[1:k, :] * w[:k - 1, :], axis=1)
    lo_x = np.sum(dex[1:k, :] * w[1:k, :], axis=1)
    hi_y = np.sum(dey[:, 1:k] * w[:, :k - 1], axis=0)
    lo_y = np.sum(dey[:, 1:k] * w[:, 1:k], axis=0)
    return ll, s_rho, hi_x - lo_x, hi_y - lo_y, floored


def loglik_and_score(theta, counts: PairCounts, diag=None):
    """Pairwise log-likelihood together with its full analytic gradient."""
    dims = counts.dims
    theta = check_theta(theta, dims)
    corr, thr = unpack_theta(theta, dims)
    grids = [thr.full_grid(j) for j in range(1, dims.q + 1)]
    total = 0.0
    score = np.zeros(dims.n_params)
    n_floored = 0
    m = dims.k - 1
    for p, r, s in iter_pairs(dims.q):
        tables = gauss.pair_tables(grids[r - 1], grids[s - 1], corr.rhos[p])
        ll, s_rho, s_ar, s_as, fl = _pair_score_parts(counts.counts[p], tables)
        total += ll
        n_floored += fl
        score[p] += s_rho
        lo = threshold_index(r, 1, dims)
        score[lo:lo + m] += s_ar
        lo = threshold_index(s, 1, dims)
        score[lo:lo + m] += s_as
    _note_underflow(n_floored, diag)
    return total, score


def pairwise_score(theta, counts: PairCounts, diag=None) -> np.ndarray:
    """Analytic score of the pairwise log-likelihood, theta packing order."""
    return loglik_and_score(theta, counts, diag)[1]


def score_rho(theta, counts: PairCounts, diag=None) -> np.ndarray:
    """Correlation block of the score vector."""
    return pairwise_score(theta, counts, diag)[:counts.dims.n_pairs]


def score_threshold(theta, counts: PairCounts, j: int, k: int, diag=None) -> float:
    """Score component for threshold a[k](j)."""
    dims = counts.dims
    return float(pairwise_score(theta, counts, diag)[threshold_index(j, k, dims)])


@dataclass(eq=False)
class _CellScoreTables:
    """Per-cell log-probability derivatives for every pair.

    For each pair and each cell (l, m), the derivative of log pr(l, m)
    with respect to: the pair's correlation (g_rho), the upper and lower
    finite cut of the first margin (g_x_hi at a[l], g_x_lo at a[l-1]) and
    of the second margin (g_y_hi at a[m], g_y_lo at a[m-1]).  Entries for
    nonexistent cuts (l = K or l = 1 boundaries) are zero, matching the
    zero-padding of the per-pair score vectors.
    """

    g_rho: np.ndarray
    g_x_hi: np.ndarray
    g_x_lo: np.ndarray
    g_y_hi: np.ndarray
    g_y_lo: np.ndarray
    floored: int


def _cell_score_tables(theta, dims: ModelDims) -> _CellScoreTables:
    theta = check_theta(theta, dims)
    corr, thr = unpack_theta(theta, dims)
    grids = [thr.full_grid(j) for j in range(1, dims.q + 1)]
    k = dims.k
    shape = (dims.n_pairs, k, k)
    g_rho = np.empty(shape)
    g_x_hi = np.zeros(shape)
    g_x_lo = np.zeros(shape)
    g_y_hi = np.zeros(shape)
    g_y_lo = np.zeros(shape)
    floored = 0
    for p, r, s in iter_pairs(dims.q):
        probs, dprob_drho, ex, ey = gauss.pair_tables(
            grids[r - 1], grids[s - 1], corr.rhos[p])
        floored += int(np.sum(probs < PROB_FLOOR))
        inv = 1.0 / np.maximum(probs, PROB_FLOOR)
        g_rho[p] = dprob_drho * inv
        dex = ex[:, 1:] - ex[:, :-1]
        dey = ey[1:, :] - ey[:-1, :]
        g_x_hi[p, :k - 1, :] = dex[1:k, :] * inv[:k - 1, :]
        g_x_lo[p, 1:, :] = -dex[1:k, :] * inv[1:k, :]
        g_y_hi[p, :, :k - 1] = dey[:, 1:k] * inv[:, :k - 1]
        g_y_lo[p, :, 1:] = -dey[:, 1:k] * inv[:, 1:k]
    return _CellScoreTables(g_rho, g_x_hi, g_x_lo, g_y_hi, g_y_lo, floored)


def per_pair_score(theta, dims: ModelDims, r: int, s: int, l: int, m: int,
                   diag=None) -> np.ndarray:
    """Zero-padded score of a single bivariate cell (r, s, l, m).

    Only the pair's correlation entry and the (at most four) finite cuts
    bounding the cell are nonzero; every parameter absent from the
    bivariate likelihood of this pair gets a zero.
    """
    if not (1 <= l <= dims.k and 1 <= m <= dims.k):
        raise ValueError(f"invalid levels ({l}, {m}) for k={dims.k}")
    p = pair_index(r, s, dims.q)
    corr, thr = unpack_theta(check_theta(theta, dims), dims)
    gr = thr.full_grid(r)
    gs = thr.full_grid(s)
    probs, dprob_drho, ex, ey = gauss.pair_tables(gr, gs, corr.rhos[p])
    prob = probs[l - 1, m - 1]
    _note_underflow(int(prob < PROB_FLOOR), diag)
    inv = 1.0 / max(prob, PROB_FLOOR)
    u = np.zeros(dims.n_params)
    u[p] = dprob_drho[l - 1, m - 1] * inv
    dex = ex[:, 1:] - ex[:, :-1]
    dey = ey[1:, :] - ey[:-1, :]
    if l <= dims.k - 1:
        u[threshold_index(r, l, dims)] = dex[l, m - 1] * inv
    if l >= 2:
        u[threshold_index(r, l - 1, dims)] = -dex[l - 1, m - 1] * inv
    if m <= dims.k - 1:
        u[threshold_index(s, m, dims)] = dey[l - 1, m] * inv
    if m >= 2:
        u[threshold_index(s, m - 1, dims)] = -dey[l - 1, m - 1] * inv
    return u


def per_observation_score(theta, row, dims: ModelDims, diag=None) -> np.ndarray:
    """Score of one observation's pairwise log-likelihood contribution."""
    row = np.asarray(row, dtype=np.int64)
    if row.shape != (dims.q,):
        raise ValueError(f"row has shape {row.shape}, expected ({dims.q},)")
    tables = _cell_score_tables(theta, dims)
    _note_underflow(tables.floored, diag)
    u = np.zeros(dims.n_params)
    _scatter_observation(u, tables, row, dims)
    return u


def _scatter_observation(u, tables: _CellScoreTables, row, dims: ModelDims):
    k = dims.k
    for p, r, s in iter_pairs(dims.q):
        li = row[r - 1] - 1
        mi = row[s - 1] - 1
        u[p] += tables.g_rho[p, li, mi]
        if li < k - 1:
            u[threshold_index(r, li + 1, dims)] += tables.g_x_hi[p, li, mi]
        if li > 0:
            u[threshold_index(r, li, dims)] += tables.g_x_lo[p, li, mi]
        if mi < k - 1:
            u[threshold_index(s, mi + 1, dims)] += tables.g_y_hi[p, li, mi]
        if mi > 0:
            u[threshold_index(s, mi, dims)] += tables.g_y_lo[p, li, mi]


def observation_score_matrix(theta, data: OrdinalDataset, diag=None) -> np.ndarray:
    """All per-observation scores stacked into an (n, n_params) matrix."""
    dims = data.dims()
    tables = _cell_score_tables(theta, dims)
    _note_underflow(tables.floored, diag)
    n = data.n
    k = dims.k
    u = np.zeros((n, dims.n_params))
    rows_idx = np.arange(n)
    codes = data.rows - 1
    for p, r, s in iter_pairs(dims.q):
        li = codes[:, r - 1]
        mi = codes[:, s - 1]
        u[:, p] += tables.g_rho[p, li, mi]
        base_r = threshold_index(r, 1, dims)
        base_s = threshold_index(s, 1, dims)
        sel = li < k - 1
        np.add.at(u, (rows_idx[sel], base_r + li[sel]),
                  tables.g_x_hi[p, li[sel], mi[sel]])
        sel = li > 0
        np.add.at(u, (rows_idx[sel], base_r + li[sel] - 1),
                  tables.g_x_lo[p, li[sel], mi[sel]])
        sel = mi < k - 1
        np.add.at(u, (rows_idx[sel], base_s + mi[sel]),
                  tables.g_y_hi[p, li[sel], mi[sel]])
        sel = mi > 0
        np.add.at(u, (rows_idx[sel], base_s + mi[sel] - 1),
                  tables.g_y_lo[p, li[sel], mi[sel]])
    return u
