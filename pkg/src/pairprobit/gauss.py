"""Gaussian kernels: univariate and bivariate CDFs, densities, derivatives.

All public functions validate their arguments and dispatch to the active
kernel backend (compiled or NumPy; see :mod:`pairprobit._backend`).
Integration limits are extended reals: ``math.inf`` and ``-math.inf`` are
first-class values and the CDF derivative identities evaluate them
analytically instead of via large finite surrogates.

Correlations are accepted up to ``|rho| <= 1 - 1e-6``.  Beyond that the
conditional-CDF formulas divide by a vanishing ``sqrt(1 - rho^2)``, so the
functions raise instead of silently degrading.
"""

from scipy.special import ndtri

from . import _backend

RHO_CAP = 1.0 - 1e-6

_impl = _backend.select_backend()


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return _impl.BACKEND_NAME


def set_backend(name: str) -> None:
    """Switch the active kernel backend (mainly for tests and benchmarks).

    Not safe to call while evaluations are running in other threads.
    """
    global _impl
    _impl = _backend.select_backend(name)


def available_backends():
    return _backend.available_backends()


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not abs(rho) <= RHO_CAP:
        raise ValueError(f"correlation {rho} outside [-{RHO_CAP}, {RHO_CAP}]")
    return rho


def norm_pdf(x: float) -> float:
    """Standard normal density at finite x."""
    return _impl.norm_pdf(float(x))


def norm_cdf(x: float) -> float:
    """Standard normal CDF; accepts +/-inf."""
    return _impl.norm_cdf(float(x))


def norm_quantile(p: float) -> float:
    """Inverse standard normal CDF on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument {p} outside (0, 1)")
    return float(ndtri(p))


def bvn_pdf(x1: float, x2: float, rho: float) -> float:
    """Standardized bivariate normal density at finite (x1, x2)."""
    return _impl.bvn_pdf(float(x1), float(x2), _check_rho(rho))


def bvn_cdf(a: float, b: float, rho: float) -> float:
    """P(Z1 <= a, Z2 <= b) with correlation rho; a, b extended reals.

    Symmetric in (a, b) exactly, and reduces to ``norm_cdf`` when one limit
    is +inf.  Absolute accuracy is better than 1e-12.
    """
    return _impl.bvn_cdf(float(a), float(b), _check_rho(rho))


def bvn_cdf_dx1(x1: float, x2: float, rho: float) -> float:
    """Partial derivative of bvn_cdf in its first limit (x1 finite)."""
    return _impl.bvn_cdf_dx1(float(x1), float(x2), _check_rho(rho))


def bvn_cdf_dx2(x1: float, x2: float, rho: float) -> float:
    """Partial derivative of bvn_cdf in its second limit (x2 finite)."""
    return _impl.bvn_cdf_dx2(float(x1), float(x2), _check_rho(rho))


def rect_prob(lo1: float, hi1: float, lo2: float, hi2: float, rho: float) -> float:
    """Probability of the axis-aligned rectangle (lo1, hi1] x (lo2, hi2].

    Evaluated as the four-term CDF combination and clamped to [0, 1] so
    that round-off never produces a negative mass for downstream logs.
    """
    if not (lo1 < hi1 and lo2 < hi2):
        raise ValueError(
            f"inverted rectangle limits: ({lo1}, {hi1}) x ({lo2}, {hi2})")
    rho = _check_rho(rho)
    p = (_impl.bvn_cdf(hi1, hi2, rho) - _impl.bvn_cdf(lo1, hi2, rho)
         - _impl.bvn_cdf(hi1, lo2, rho) + _impl.bvn_cdf(lo1, lo2, rho))
    return min(1.0, max(0.0, p))


def pair_probs(cuts_x, cuts_y, rho: float):
    """K x K rectangle probabilities over two full cut grids (with +/-inf)."""
    return _impl.pair_probs(cuts_x, cuts_y, _check_rho(rho))


def pair_tables(cuts_x, cuts_y, rho: float):
    """Cell probabilities and derivative corner grids for one margin pair.

    See the backend docstring for the exact layout; this is the shared
    building block of the pairwise likelihood and score evaluations.
    """
    return _impl.pair_tables(cuts_x, cuts_y, _check_rho(rho))


def bvn_cdf_many(a, b, rho: float):
    """Vectorized bvn_cdf over arrays of limits (shared rho)."""
    return _impl.bvn_cdf_many(a, b, _check_rho(rho))
