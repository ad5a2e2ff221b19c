"""Godambe information: empirical sensitivity/variability matrices,
standard errors and Wald confidence intervals.

The variability matrix J is the average outer product of per-observation
scores; the sensitivity matrix H uses the second Bartlett identity and
averages the outer products of the zero-padded per-pair scores instead of
differentiating the score.  The Godambe information G = H J^-1 H gives the
asymptotic precision of the maximum pairwise likelihood estimator;
standard errors come from diag(G^-1) / n.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .counts import OrdinalDataset, PairCounts
from .gauss import norm_quantile
from .model import ModelDims, check_theta, iter_pairs, threshold_index
from .pairwise import (_cell_score_tables, _note_underflow,
                       observation_score_matrix)

COND_LIMIT = 1e12


class InferenceError(RuntimeError):
    """Raised when interval estimation is impossible (e.g. G not PD)."""


@dataclass
class GodambeMatrices:
    """Empirical J (variability), H (sensitivity) and G = H J^-1 H."""

    j_hat: np.ndarray
    h_hat: np.ndarray
    g_hat: np.ndarray
    j_singular: bool


@dataclass(frozen=True)
class WaldInterval:
    estimate: float
    std_error: float
    lower: float
    upper: float
    level: float


def variability_J(theta_hat, data: OrdinalDataset, diag=None) -> np.ndarray:
    """(1/n) sum of per-observation score outer products at theta_hat."""
    u = observation_score_matrix(theta_hat, data, diag)
    return u.T @ u / data.n


def sensitivity_H(theta_hat, counts: PairCounts, diag=None) -> np.ndarray:
    """Bartlett-identity estimate: count-weighted per-pair score outer
    products, averaged over observations."""
    dims = counts.dims
    check_theta(theta_hat, dims)
    tables = _cell_score_tables(theta_hat, dims)
    _note_underflow(tables.floored, diag)
    k = dims.k
    h = np.zeros((dims.n_params, dims.n_params))
    for p, r, s in iter_pairs(dims.q):
        cnt = counts.counts[p]
        for li in range(k):
            for mi in range(k):
                c = cnt[li, mi]
                if c == 0:
                    continue
                cols = [p]
                vals = [tables.g_rho[p, li, mi]]
                if li < k - 1:
                    cols.append(threshold_index(r, li + 1, dims))
                    vals.append(tables.g_x_hi[p, li, mi])
                if li > 0:
                    cols.append(threshold_index(r, li, dims))
                    vals.append(tables.g_x_lo[p, li, mi])
                if mi < k - 1:
                    cols.append(threshold_index(s, mi + 1, dims))
                    vals.append(tables.g_y_hi[p, li, mi])
                if mi > 0:
                    cols.append(threshold_index(s, mi, dims))
                    vals.append(tables.g_y_lo[p, li, mi])
                vals = np.asarray(vals)
                h[np.ix_(cols, cols)] += c * np.outer(vals, vals)
    return h / dims.n


def godambe_G(j_hat, h_hat) -> np.ndarray:
    """G = H J^-1 H, symmetrized; falls back to a pseudo-inverse (with a
    warning) when J is numerically singular."""
    g, singular = _godambe_with_flag(j_hat, h_hat)
    if singular:
        warnings.warn("variability matrix numerically singular; "
                      "used pseudo-inverse", RuntimeWarning, stacklevel=2)
    return g


def _godambe_with_flag(j_hat, h_hat):
    j_hat = np.asarray(j_hat, dtype=np.float64)
    h_hat = np.asarray(h_hat, dtype=np.float64)
    singular = bool(not np.all(np.isfinite(j_hat))
                    or np.linalg.cond(j_hat) > COND_LIMIT)
    if singular:
        jinv_h = np.linalg.pinv(j_hat) @ h_hat
    else:
        jinv_h = np.linalg.solve(j_hat, h_hat)
    g = h_hat @ jinv_h
    return (g + g.T) / 2.0, singular


def godambe_matrices(theta_hat, data: OrdinalDataset, counts: PairCounts,
                     diag=None) -> GodambeMatrices:
    """All three empirical matrices evaluated at theta_hat."""
    j_hat = variability_J(theta_hat, data, diag)
    h_hat = sensitivity_H(theta_hat, counts, diag)
    g_hat, singular = _godambe_with_flag(j_hat, h_hat)
    return GodambeMatrices(j_hat=j_hat, h_hat=h_hat, g_hat=g_hat,
                           j_singular=singular)


def wald_intervals(theta_hat, g_hat, dims: ModelDims, level: float = 0.95):
    """Wald confidence intervals for every parameter.

    Standard errors are sqrt(diag(G^-1) / n); correlation-parameter
    intervals are clamped to [-1, 1].  Thresholds get intervals too (the
    machinery is identical) and are left unclamped.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level {level} outside (0, 1)")
    theta_hat = check_theta(theta_hat, dims)
    g_hat = np.asarray(g_hat, dtype=np.float64)
    eigvals = np.linalg.eigvalsh((g_hat + g_hat.T) / 2.0)
    if eigvals.min() <= 0:
        raise InferenceError(
            "Godambe information is not positive definite "
            f"(min eigenvalue {eigvals.min():.3e}); intervals undefined")
    g_inv = np.linalg.inv(g_hat)
    se = np.sqrt(np.diag(g_inv) / dims.n)
    z = norm_quantile(1.0 - (1.0 - level) / 2.0)
    out = []
    for t in range(dims.n_params):
        lo = theta_hat[t] - z * se[t]
        hi = theta_hat[t] + z * se[t]
        if t < dims.n_pairs:
            lo = max(lo, -1.0)
            hi = min(hi, 1.0)
        out.append(WaldInterval(estimate=float(theta_hat[t]),
                                std_error=float(se[t]),
                                lower=float(lo), upper=float(hi),
                                level=level))
    return out


def z_multiplier(level: float) -> float:
    """Normal quantile used by the Wald interval at this level."""
    return norm_quantile(1.0 - (1.0 - level) / 2.0)
