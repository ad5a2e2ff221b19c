"""Shared test oracles, deliberately independent of the library's own
evaluation paths: plain finite differences, adaptive quadrature, dense
grid refinement, and a per-row likelihood built from rect_prob alone."""

import numpy as np
from scipy.integrate import dblquad

import pairprobit as pp
from pairprobit import gauss
from pairprobit.model import iter_pairs


def fd_gradient(f, x, step=1e-5):
    """Central finite differences with per-coordinate relative steps."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for t in range(x.size):
        h = step * max(1.0, abs(x[t]))
        xp = x.copy()
        xm = x.copy()
        xp[t] += h
        xm[t] -= h
        g[t] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_hessian(f, x, step=1e-4):
    """Central second differences (4 evaluations per off-diagonal entry)."""
    x = np.asarray(x, dtype=np.float64)
    p = x.size
    hess = np.empty((p, p))
    hs = np.array([step * max(1.0, abs(v)) for v in x])
    f0 = f(x)
    for i in range(p):
        xp = x.copy()
        xm = x.copy()
        xp[i] += hs[i]
        xm[i] -= hs[i]
        hess[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / hs[i] ** 2
    for i in range(p):
        for j in range(i + 1, p):
            xpp = x.copy()
            xpm = x.copy()
            xmp = x.copy()
            xmm = x.copy()
            xpp[[i, j]] += hs[[i, j]]
            xmm[[i, j]] -= hs[[i, j]]
            xpm[i] += hs[i]
            xpm[j] -= hs[j]
            xmp[i] -= hs[i]
            xmp[j] += hs[j]
            hess[i, j] = hess[j, i] = \
                (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * hs[i] * hs[j])
    return hess


def bvn_cdf_quad(a, b, rho, cutoff=9.0):
    """Adaptive 2-D quadrature oracle for the bivariate normal CDF.

    Truncates the lower limits at -cutoff (mass below is ~1e-19).
    """
    if a == -np.inf or b == -np.inf:
        return 0.0
    a = min(a, cutoff)
    b = min(b, cutoff)
    val, _ = dblquad(lambda y, x: gauss.bvn_pdf(x, y, rho),
                     -cutoff, a, -cutoff, b,
                     epsabs=1e-13, epsrel=1e-11)
    return val


def rowwise_loglik(theta, data):
    """Per-observation pairwise log-likelihood via rect_prob only."""
    dims = data.dims()
    corr, thr = pp.unpack_theta(theta, dims)
    total = 0.0
    for row in data.rows:
        for p, r, s in iter_pairs(dims.q):
            gr = thr.full_grid(r)
            gs = thr.full_grid(s)
            l = row[r - 1]
            m = row[s - 1]
            total += np.log(gauss.rect_prob(gr[l - 1], gr[l],
                                            gs[m - 1], gs[m], corr.rhos[p]))
    return total


def grid_refine(f, x0, span, rounds=6, points=7):
    """Iterated dense grid maximization, derivative free.

    Evaluates a full cartesian grid around the current best point and
    shrinks the span each round.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    span = np.asarray(span, dtype=np.float64).copy()
    best = f(x)
    for _ in range(rounds):
        axes = [np.linspace(x[i] - span[i], x[i] + span[i], points)
                for i in range(x.size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        cand = np.stack([m.ravel() for m in mesh], axis=1)
        for c in cand:
            v = f(c)
            if v > best:
                best = v
                x = c.copy()
        span *= 2.0 / (points - 1)
    return x, best


def random_instance(q, k, n, seed, rho_scale=0.85):
    """Dataset simulated from a valid truth plus a generic evaluation
    point (independent per-pair correlations, perturbed thresholds)."""
    root = np.random.SeedSequence(seed)
    rng = np.random.default_rng(root.spawn(1)[0])
    sigma0 = pp.random_sparse_correlation(q, 0.0, rng)
    base = np.linspace(-1.2, 1.2, k - 1) if k > 2 else np.zeros(1)
    cuts0 = np.tile(base, (q, 1)) + rng.uniform(-0.2, 0.2, size=(q, 1))
    thr0 = pp.ThresholdSet(cuts0)
    data = pp.sample_dataset(sigma0, thr0, n, rng)
    dims = data.dims()
    counts = pp.compute_counts(data, dims)

    rhos = rng.uniform(-rho_scale, rho_scale, size=dims.n_pairs)
    cuts = cuts0 + rng.uniform(-0.15, 0.15, size=cuts0.shape)
    theta = np.concatenate([rhos, np.sort(cuts, axis=1).ravel()])
    return theta, counts, data, dims
