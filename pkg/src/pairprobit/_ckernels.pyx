# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Scalar-for-scalar twin of ``pairprobit._pykernels``: same Drezner-
Wesolowsky/Genz hybrid for the bivariate CDF, same corner-grid tables,
implemented as tight C loops.  Selected automatically at import when the
extension is built; see ``pairprobit._backend``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, asin, erfc, exp, fabs, isfinite, isinf, log, sin, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef double SQRT_TWOPI = 2.5066282746310002
cdef double TWOPI = 6.283185307179586
cdef double INV_SQRT2 = 0.7071067811865476

# Gauss-Legendre half rules (positive abscissae and matching weights).
cdef double[3] GL6_X = [0.9324695142031522, 0.6612093864662647, 0.2386191860831970]
cdef double[3] GL6_W = [0.1713244923791705, 0.3607615730481384, 0.4679139345726904]
cdef double[6] GL12_X = [0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                         0.5873179542866171, 0.3678314989981802, 0.1252334085114692]
cdef double[6] GL12_W = [0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                         0.2031674267230659, 0.2334925365383547, 0.2491470458134029]
cdef double[10] GL20_X = [0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                          0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                          0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                          0.07652652113349733]
cdef double[10] GL20_W = [0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                          0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
                          0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                          0.1527533871307259]


cdef inline double _phid(double x) noexcept nogil:
    return 0.5 * erfc(-x * INV_SQRT2)


cdef inline double _phi(double x) noexcept nogil:
    return exp(-0.5 * x * x) / SQRT_TWOPI


cdef double _bvnu(double dh, double dk, double r) noexcept nogil:
    """P(X > dh, Y > dk), standard bivariate normal, correlation r."""
    cdef:
        double h, k, hk, bvn, hs, asr, sn, a_s, a, bs, c, d
        double b, xs, rs, asr1, tmp
        double* X
        double* W
        int ng, i, sgn

    if dh == INFINITY or dk == INFINITY:
        return 0.0
    if dh == -INFINITY:
        return 1.0 if dk == -INFINITY else _phid(-dk)
    if dk == -INFINITY:
        return _phid(-dh)
    if r == 0.0:
        return _phid(-dh) * _phid(-dk)

    # canonical argument order keeps every code path symmetric in (h, k)
    if dh <= dk:
        h = dh
        k = dk
    else:
        h = dk
        k = dh
    hk = h * k
    bvn = 0.0
    if fabs(r) < 0.3:
        ng = 3
        X = &GL6_X[0]
        W = &GL6_W[0]
    elif fabs(r) < 0.75:
        ng = 6
        X = &GL12_X[0]
        W = &GL12_W[0]
    else:
        ng = 10
        X = &GL20_X[0]
        W = &GL20_W[0]

    if fabs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = asin(r)
        for i in range(ng):
            for sgn in range(-1, 2, 2):
                sn = sin(0.5 * asr * (sgn * X[i] + 1.0))
                bvn += W[i] * exp((sn * hk - hs) / (1.0 - sn * sn))
        bvn = bvn * asr / (2.0 * TWOPI) + _phid(-h) * _phid(-k)
    else:
        if r < 0.0:
            k = -k
            hk = -hk
        a_s = (1.0 - r) * (1.0 + r)
        a = sqrt(a_s)
        bs = (h - k) * (h - k)
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        asr1 = -0.5 * (bs / a_s + hk)
        if asr1 > -100.0:
            bvn = a * exp(asr1) * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0
                                   + c * d * a_s * a_s / 5.0)
        if -hk < 100.0:
            b = sqrt(bs)
            bvn -= exp(-0.5 * hk) * SQRT_TWOPI * _phid(-b / a) * b \
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
        a *= 0.5
        for i in range(ng):
            for sgn in range(-1, 2, 2):
                xs = a * (sgn * X[i] + 1.0)
                xs *= xs
                rs = sqrt(1.0 - xs)
                asr1 = -0.5 * (bs / xs + hk)
                if asr1 > -100.0:
                    tmp = exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs \
                        - (1.0 + c * xs * (1.0 + d * xs))
                    bvn += a * W[i] * exp(asr1) * tmp
        bvn = -bvn / TWOPI
        if r > 0.0:
            bvn += _phid(-(h if h > k else k))
        else:
            bvn = -bvn
            if k > h:
                bvn += _phid(k) - _phid(h)
    if bvn < 0.0:
        bvn = 0.0
    elif bvn > 1.0:
        bvn = 1.0
    return bvn


cdef inline double _bvn_pdf(double x1, double x2, double rho) noexcept nogil:
    cdef double s2 = (1.0 - rho) * (1.0 + rho)
    cdef double q = x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2
    return exp(-0.5 * q / s2) / (TWOPI * sqrt(s2))


cdef inline double _dx1(double x1, double x2, double rho, double s) noexcept nogil:
    # phi(x1) * Phi((x2 - rho*x1)/s); exact at infinite x2, zero at infinite x1
    if isinf(x1):
        return 0.0
    if x2 == INFINITY:
        return _phi(x1)
    if x2 == -INFINITY:
        return 0.0
    return _phi(x1) * _phid((x2 - rho * x1) / s)


def norm_pdf(double x):
    """Standard normal density."""
    return _phi(x)


def norm_cdf(double x):
    """Standard normal CDF; exact at +/-inf."""
    return _phid(x)


def bvn_pdf(double x1, double x2, double rho):
    """Density of the standardized bivariate normal with correlation rho."""
    return _bvn_pdf(x1, x2, rho)


def bvn_cdf(double a, double b, double rho):
    """P(Z1 <= a, Z2 <= b) under correlation rho; a, b may be +/-inf."""
    return _bvnu(-a, -b, rho)


def bvn_cdf_many(a, b, double rho):
    """Vectorized bvn_cdf over arrays of limits with a shared rho."""
    cdef cnp.ndarray[double, ndim=1] av, bv, out
    cdef Py_ssize_t i
    a2, b2 = np.broadcast_arrays(np.asarray(a, np.float64),
                                 np.asarray(b, np.float64))
    av = np.ascontiguousarray(a2.ravel())
    bv = np.ascontiguousarray(b2.ravel())
    out = np.empty(av.shape[0])
    for i in range(av.shape[0]):
        out[i] = _bvnu(-av[i], -bv[i], rho)
    return out.reshape(a2.shape)


def bvn_cdf_dx1(double x1, double x2, double rho):
    """d/dx1 of bvn_cdf: phi(x1) * Phi((x2 - rho*x1)/sqrt(1-rho^2))."""
    cdef double s = sqrt((1.0 - rho) * (1.0 + rho))
    return _dx1(x1, x2, rho, s)


def bvn_cdf_dx2(double x1, double x2, double rho):
    """d/dx2 of bvn_cdf, the mirror image of bvn_cdf_dx1."""
    cdef double s = sqrt((1.0 - rho) * (1.0 + rho))
    return _dx1(x2, x1, rho, s)


def pair_probs(cuts_x, cuts_y, double rho):
    """Rectangle probabilities over full cut grids (with +/-inf endpoints)."""
    cdef cnp.ndarray[double, ndim=1] xs = np.ascontiguousarray(cuts_x, np.float64)
    cdef cnp.ndarray[double, ndim=1] ys = np.ascontiguousarray(cuts_y, np.float64)
    cdef Py_ssize_t nx = xs.shape[0], ny = ys.shape[0]
    cdef cnp.ndarray[double, ndim=2] cdf = np.empty((nx, ny))
    cdef cnp.ndarray[double, ndim=2] probs = np.empty((nx - 1, ny - 1))
    cdef Py_ssize_t i, j
    cdef double p
    with nogil:
        for i in range(nx):
            for j in range(ny):
                cdf[i, j] = _bvnu(-xs[i], -ys[j], rho)
        for i in range(nx - 1):
            for j in range(ny - 1):
                p = cdf[i + 1, j + 1] - cdf[i, j + 1] - cdf[i + 1, j] + cdf[i, j]
                probs[i, j] = 0.0 if p < 0.0 else (1.0 if p > 1.0 else p)
    return probs


def pair_tables(cuts_x, cuts_y, double rho):
    """Cell probabilities plus derivative corner grids for one margin pair.

    Same layout as the NumPy backend: (probs, dprob_drho, ex, ey) with
    probs/dprob_drho of shape (K, K) and ex/ey of shape (K+1, K+1).
    """
    cdef cnp.ndarray[double, ndim=1] xs = np.ascontiguousarray(cuts_x, np.float64)
    cdef cnp.ndarray[double, ndim=1] ys = np.ascontiguousarray(cuts_y, np.float64)
    cdef Py_ssize_t nx = xs.shape[0], ny = ys.shape[0]
    cdef cnp.ndarray[double, ndim=2] cdf = np.empty((nx, ny))
    cdef cnp.ndarray[double, ndim=2] probs = np.empty((nx - 1, ny - 1))
    cdef cnp.ndarray[double, ndim=2] drho = np.empty((nx - 1, ny - 1))
    cdef cnp.ndarray[double, ndim=2] dens = np.empty((nx, ny))
    cdef cnp.ndarray[double, ndim=2] ex = np.empty((nx, ny))
    cdef cnp.ndarray[double, ndim=2] ey = np.empty((nx, ny))
    cdef Py_ssize_t i, j
    cdef double s = sqrt((1.0 - rho) * (1.0 + rho))
    cdef double p, xi, yj
    with nogil:
        for i in range(nx):
            xi = xs[i]
            for j in range(ny):
                yj = ys[j]
                cdf[i, j] = _bvnu(-xi, -yj, rho)
                dens[i, j] = _bvn_pdf(xi, yj, rho) \
                    if (isfinite(xi) and isfinite(yj)) else 0.0
                ex[i, j] = _dx1(xi, yj, rho, s)
                ey[i, j] = _dx1(yj, xi, rho, s)
        for i in range(nx - 1):
            for j in range(ny - 1):
                p = cdf[i + 1, j + 1] - cdf[i, j + 1] - cdf[i + 1, j] + cdf[i, j]
                probs[i, j] = 0.0 if p < 0.0 else (1.0 if p > 1.0 else p)
                drho[i, j] = dens[i + 1, j + 1] - dens[i, j + 1] \
                    - dens[i + 1, j] + dens[i, j]
    return probs, drho, ex, ey
