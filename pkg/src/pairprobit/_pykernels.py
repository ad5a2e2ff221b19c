"""NumPy kernel backend (always available).

Implements the standard and bivariate Gaussian kernels used throughout the
package, plus the per-pair corner-grid tables consumed by the likelihood
and score code.  A compiled Cython twin (``pairprobit._ckernels``) exposes
the same functions; see ``pairprobit._backend`` for how one of the two is
selected at import time.

The bivariate CDF follows the Drezner-Wesolowsky method as refined by Genz
(hybrid Gauss-Legendre quadrature in the correlation parameter, with a
transformed integrand for |rho| > 0.925), cf. Genz's BVND routine.  Its
absolute accuracy is near machine precision, well inside the 1e-12 target
needed for stable log-derivatives at extreme cells.
"""

import math

import numpy as np
from scipy.special import ndtr

BACKEND_NAME = "python"

_SQRT_TWOPI = math.sqrt(2.0 * math.pi)
_TWOPI = 2.0 * math.pi

# Gauss-Legendre half rules (positive abscissae and matching weights).
_GL_X = {
    6: np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970]),
    12: np.array([0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                  0.5873179542866171, 0.3678314989981802, 0.1252334085114692]),
    20: np.array([0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                  0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                  0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                  0.07652652113349733]),
}
_GL_W = {
    6: np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904]),
    12: np.array([0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                  0.2031674267230659, 0.2334925365383547, 0.2491470458134029]),
    20: np.array([0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                  0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
                  0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                  0.1527533871307259]),
}


def norm_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / _SQRT_TWOPI


def norm_cdf(x: float) -> float:
    """Standard normal CDF; exact at +/-inf."""
    return float(ndtr(x))


def bvn_pdf(x1: float, x2: float, rho: float) -> float:
    """Density of the standardized bivariate normal with correlation rho."""
    s2 = (1.0 - rho) * (1.0 + rho)
    q = x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2
    return math.exp(-0.5 * q / s2) / (_TWOPI * math.sqrt(s2))


def _rule(rho: float):
    ar = abs(rho)
    if ar < 0.3:
        n = 6
    elif ar < 0.75:
        n = 12
    else:
        n = 20
    return _GL_X[n], _GL_W[n]


def _bvnu_finite(h, k, r):
    """P(X > h, Y > k), vectorized over finite h, k; scalar r in (-1, 1)."""
    h = np.asarray(h, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if r == 0.0:
        return ndtr(-h) * ndtr(-k)
    # canonical argument order makes every code path symmetric in (h, k)
    h, k = np.minimum(h, k), np.maximum(h, k)
    x, w = _rule(r)
    hk = h * k

    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        sn = np.sin(0.5 * asr * np.concatenate([1.0 - x, 1.0 + x]))
        ws = np.concatenate([w, w])
        t = np.exp((np.multiply.outer(hk, sn) - hs[..., None]) / (1.0 - sn * sn))
        bvn = t @ ws * asr / (2.0 * _TWOPI)
        return np.clip(bvn + ndtr(-h) * ndtr(-k), 0.0, 1.0)

    if r < 0.0:
        k = -k
        hk = -hk
    a_s = (1.0 - r) * (1.0 + r)
    a = math.sqrt(a_s)
    bs = (h - k) ** 2
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 16.0
    asr0 = -0.5 * (bs / a_s + hk)
    with np.errstate(over="ignore", invalid="ignore"):
        bvn = np.where(
            asr0 > -100.0,
            a * np.exp(asr0) * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0
                                + c * d * a_s * a_s / 5.0),
            0.0,
        )
        b = np.sqrt(bs)
        tail = np.exp(-0.5 * hk) * _SQRT_TWOPI * ndtr(-b / a) * b \
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
        bvn = bvn - np.where(-hk < 100.0, tail, 0.0)
        a2 = 0.5 * a
        for xi, wi in zip(np.concatenate([1.0 - x, 1.0 + x]),
                          np.concatenate([w, w])):
            xs = (a2 * xi) ** 2
            rs = math.sqrt(1.0 - xs)
            asr1 = -0.5 * (bs / xs + hk)
            term = np.exp(asr1) * (
                np.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                - (1.0 + c * xs * (1.0 + d * xs)))
            bvn = bvn + np.where(asr1 > -100.0, a2 * wi * term, 0.0)
    bvn = -bvn / _TWOPI
    if r > 0.0:
        bvn = bvn + ndtr(-np.maximum(h, k))
    else:
        bvn = -bvn + np.where(k > h, ndtr(k) - ndtr(h), 0.0)
    return np.clip(bvn, 0.0, 1.0)


def _bvnu(h, k, r):
    """P(X > h, Y > k) for extended-real h, k (vectorized)."""
    h, k = np.broadcast_arrays(np.asarray(h, np.float64), np.asarray(k, np.float64))
    out = np.zeros(h.shape)  # covers h = +inf or k = +inf
    m = np.isneginf(h) & np.isneginf(k)
    out[m] = 1.0
    m = np.isneginf(h) & np.isfinite(k)
    out[m] = ndtr(-k[m])
    m = np.isfinite(h) & np.isneginf(k)
    out[m] = ndtr(-h[m])
    m = np.isfinite(h) & np.isfinite(k)
    if np.any(m):
        out[m] = _bvnu_finite(h[m], k[m], r)
    return out


def bvn_cdf(a: float, b: float, rho: float) -> float:
    """P(Z1 <= a, Z2 <= b) under correlation rho; a, b may be +/-inf."""
    return float(_bvnu(np.array([-a]), np.array([-b]), rho)[0])


def bvn_cdf_many(a, b, rho: float):
    """Vectorized bvn_cdf over arrays of limits with a shared rho."""
    return _bvnu(-np.asarray(a, np.float64), -np.asarray(b, np.float64), rho)


def bvn_cdf_dx1(x1: float, x2: float, rho: float) -> float:
    """d/dx1 of bvn_cdf: phi(x1) * Phi((x2 - rho*x1)/sqrt(1-rho^2))."""
    if x2 == math.inf:
        return norm_pdf(x1)
    if x2 == -math.inf:
        return 0.0
    s = math.sqrt((1.0 - rho) * (1.0 + rho))
    return norm_pdf(x1) * float(ndtr((x2 - rho * x1) / s))


def bvn_cdf_dx2(x1: float, x2: float, rho: float) -> float:
    """d/dx2 of bvn_cdf, the mirror image of bvn_cdf_dx1."""
    return bvn_cdf_dx1(x2, x1, rho)


def _cdf_grid(xs, ys, rho):
    return _bvnu(-xs[:, None], -ys[None, :], rho)


def _corner_diff(grid):
    return grid[1:, 1:] - grid[:-1, 1:] - grid[1:, :-1] + grid[:-1, :-1]


def pair_probs(cuts_x, cuts_y, rho: float):
    """Rectangle probabilities for one margin pair.

    ``cuts_x``/``cuts_y`` are the full per-margin grids of length K+1
    including the -inf/+inf endpoints.  Returns the K x K cell matrix.
    """
    xs = np.asarray(cuts_x, np.float64)
    ys = np.asarray(cuts_y, np.float64)
    return np.clip(_corner_diff(_cdf_grid(xs, ys, rho)), 0.0, 1.0)


def pair_tables(cuts_x, cuts_y, rho: float):
    """Cell probabilities plus the three derivative corner grids of a pair.

    Returns ``(probs, dprob_drho, ex, ey)`` where ``probs`` and
    ``dprob_drho`` are K x K cell matrices and ``ex``/``ey`` are the
    (K+1) x (K+1) corner grids of the two partial derivatives of the
    bivariate CDF (``ex[i, j] = phi(x_i) * Phi((y_j - rho*x_i)/s)`` and the
    mirror image), with rows/columns at infinite cuts set to zero.
    """
    xs = np.asarray(cuts_x, np.float64)
    ys = np.asarray(cuts_y, np.float64)
    probs = np.clip(_corner_diff(_cdf_grid(xs, ys, rho)), 0.0, 1.0)

    x = xs[:, None]
    y = ys[None, :]
    finx = np.isfinite(x)
    finy = np.isfinite(y)
    s2 = (1.0 - rho) * (1.0 + rho)
    s = math.sqrt(s2)
    with np.errstate(invalid="ignore"):
        q = x * x - 2.0 * rho * x * y + y * y
        dens = np.where(finx & finy,
                        np.exp(-0.5 * q / s2) / (_TWOPI * s), 0.0)
        ex = np.where(finx,
                      np.exp(-0.5 * x * x) / _SQRT_TWOPI * ndtr((y - rho * x) / s),
                      0.0)
        ey = np.where(finy,
                      np.exp(-0.5 * y * y) / _SQRT_TWOPI * ndtr((x - rho * y) / s),
                      0.0)
    return probs, _corner_diff(dens), ex, ey
