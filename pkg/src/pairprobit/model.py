"""Parameter containers, packing order, and the ordered-threshold map.

The packed parameter vector theta lists the latent correlations first
(upper triangle, lexicographic in (r, s)) followed by the thresholds
margin by margin:

    theta = (rho[1,2], ..., rho[q-1,q],
             a[1](1), ..., a[K-1](1), ..., a[1](q), ..., a[K-1](q))

The unconstrained vector psi keeps the correlations and each first
threshold a[1](j) unchanged and replaces the remaining thresholds by log
spacings delta[k](j) = log(a[k](j) - a[k-1](j)), which makes the strict
threshold ordering automatic for any real psi.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelDims:
    """Problem dimensions: q margins, k categories per margin, n rows."""

    q: int
    k: int
    n: int

    def __post_init__(self):
        if self.q < 2:
            raise ValueError(f"need at least two margins, got q={self.q}")
        if self.k < 2:
            raise ValueError(f"need at least two categories, got k={self.k}")
        if self.n < 1:
            raise ValueError(f"need at least one observation, got n={self.n}")

    @property
    def n_pairs(self) -> int:
        return self.q * (self.q - 1) // 2

    @property
    def n_thresholds(self) -> int:
        return (self.k - 1) * self.q

    @property
    def n_params(self) -> int:
        return self.n_pairs + self.n_thresholds


def pair_index(r: int, s: int, q: int) -> int:
    """Flat index of correlation rho[r,s] (1-based r < s) in theta."""
    if not (1 <= r < s <= q):
        raise ValueError(f"invalid margin pair ({r}, {s}) for q={q}")
    return (r - 1) * q - r * (r + 1) // 2 + s - 1


def threshold_index(j: int, k: int, dims: ModelDims) -> int:
    """Flat index of threshold a[k](j) (1-based j, k) in theta."""
    if not (1 <= j <= dims.q and 1 <= k <= dims.k - 1):
        raise ValueError(f"invalid threshold a[{k}]({j}) for dims {dims}")
    return dims.n_pairs + (j - 1) * (dims.k - 1) + (k - 1)


def iter_pairs(q: int):
    """Yield (flat index, r, s) over margin pairs in packing order."""
    p = 0
    for r in range(1, q):
        for s in range(r + 1, q + 1):
            yield p, r, s
            p += 1


def parameter_names(dims: ModelDims) -> list:
    """Labels in theta packing order: 'rho[r,s]' then 'a[k](j)'."""
    names = [f"rho[{r},{s}]" for _, r, s in iter_pairs(dims.q)]
    for j in range(1, dims.q + 1):
        names.extend(f"a[{k}]({j})" for k in range(1, dims.k))
    return names


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """Per-margin ordered cut-points, shape (q, K-1); +/-inf are implicit."""

    cuts: np.ndarray

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=np.float64)
        if cuts.ndim != 2:
            raise ValueError("cuts must be a (q, K-1) array")
        object.__setattr__(self, "cuts", cuts)
        if cuts.shape[1] > 1 and not np.all(np.diff(cuts, axis=1) > 0):
            bad = int(np.argmax(~np.all(np.diff(cuts, axis=1) > 0, axis=1))) + 1
            raise ValueError(f"thresholds of margin {bad} are not strictly increasing")
        if not np.all(np.isfinite(cuts)):
            raise ValueError("thresholds must be finite")

    @property
    def q(self) -> int:
        return self.cuts.shape[0]

    @property
    def k(self) -> int:
        return self.cuts.shape[1] + 1

    def full_grid(self, j: int) -> np.ndarray:
        """Cut grid of margin j (1-based) padded with -inf and +inf."""
        return np.concatenate(([-np.inf], self.cuts[j - 1], [np.inf]))


@dataclass(frozen=True, eq=False)
class CorrelationParams:
    """Upper-triangle latent correlations in packing order."""

    rhos: np.ndarray

    def __post_init__(self):
        rhos = np.asarray(self.rhos, dtype=np.float64)
        if rhos.ndim != 1:
            raise ValueError("rhos must be a flat vector")
        object.__setattr__(self, "rhos", rhos)
        if not np.all(np.abs(rhos) < 1.0):
            raise ValueError("correlations must lie strictly inside (-1, 1)")

    @property
    def q(self) -> int:
        # n_pairs = q(q-1)/2  =>  q = (1 + sqrt(1 + 8 n_pairs)) / 2
        q = int(round((1 + np.sqrt(1 + 8 * len(self.rhos))) / 2))
        if q * (q - 1) // 2 != len(self.rhos):
            raise ValueError(f"{len(self.rhos)} entries is not a triangular number")
        return q

    def matrix(self) -> np.ndarray:
        """Full symmetric correlation matrix with unit diagonal."""
        q = self.q
        sigma = np.eye(q)
        for p, r, s in iter_pairs(q):
            sigma[r - 1, s - 1] = sigma[s - 1, r - 1] = self.rhos[p]
        return sigma

    @classmethod
    def from_matrix(cls, sigma) -> "CorrelationParams":
        sigma = np.asarray(sigma, dtype=np.float64)
        q = sigma.shape[0]
        return cls(np.array([sigma[r - 1, s - 1] for _, r, s in iter_pairs(q)]))


def pack_theta(corr: CorrelationParams, thresholds: ThresholdSet) -> np.ndarray:
    return np.concatenate([corr.rhos, thresholds.cuts.ravel()])


def unpack_theta(theta, dims: ModelDims):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (dims.n_params,):
        raise ValueError(
            f"theta has length {theta.shape}, expected ({dims.n_params},)")
    corr = CorrelationParams(theta[:dims.n_pairs])
    cuts = theta[dims.n_pairs:].reshape(dims.q, dims.k - 1)
    return corr, ThresholdSet(cuts)


def check_theta(theta, dims: ModelDims) -> np.ndarray:
    """Validate packing length, correlation range, threshold ordering."""
    unpack_theta(theta, dims)
    return np.asarray(theta, dtype=np.float64)


def to_psi(theta, dims: ModelDims) -> np.ndarray:
    """Map theta to the unconstrained parametrization (log spacings)."""
    theta = np.asarray(theta, dtype=np.float64)
    psi = theta.copy()
    if dims.k == 2:
        return psi
    cuts = theta[dims.n_pairs:].reshape(dims.q, dims.k - 1)
    spac = np.diff(cuts, axis=1)
    if np.any(spac <= 0):
        raise ValueError("thresholds are not strictly increasing")
    out = psi[dims.n_pairs:].reshape(dims.q, dims.k - 1)
    out[:, 1:] = np.log(spac)
    return psi


def from_psi(psi, dims: ModelDims) -> np.ndarray:
    """Inverse of to_psi; output always has strictly ordered thresholds."""
    psi = np.asarray(psi, dtype=np.float64)
    theta = psi.copy()
    if dims.k == 2:
        return theta
    block = theta[dims.n_pairs:].reshape(dims.q, dims.k - 1)
    block[:, 1:] = np.exp(block[:, 1:])
    np.cumsum(block, axis=1, out=block)
    return theta


def psi_jacobian(psi, dims: ModelDims) -> np.ndarray:
    """Block-diagonal Jacobian d(from_psi)/d(psi).

    Identity on the correlation block; per margin j a lower-triangular
    (K-1) x (K-1) block with first column all ones and exp(delta[t](j)) in
    column t (t >= 2) from row t downward.
    """
    psi = np.asarray(psi, dtype=np.float64)
    p = dims.n_params
    jac = np.zeros((p, p))
    np.fill_diagonal(jac[:dims.n_pairs, :dims.n_pairs], 1.0)
    m = dims.k - 1
    for j in range(dims.q):
        lo = dims.n_pairs + j * m
        block = jac[lo:lo + m, lo:lo + m]
        block[:, 0] = 1.0
        for t in range(1, m):
            block[t:, t] = np.exp(psi[lo + t])
    return jac


def chain_rule_score(score_theta, psi, dims: ModelDims) -> np.ndarray:
    """Score in psi coordinates: row vector times the block Jacobian."""
    score_theta = np.asarray(score_theta, dtype=np.float64)
    if score_theta.shape != (dims.n_params,):
        raise ValueError(
            f"score has shape {score_theta.shape}, expected ({dims.n_params},)")
    return score_theta @ psi_jacobian(psi, dims)
