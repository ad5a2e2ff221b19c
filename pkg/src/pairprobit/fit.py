"""Maximum pairwise likelihood estimation.

The objective is maximized over the unconstrained parametrization psi
(log threshold spacings) with the analytic gradient mapped through the
chain rule, using a bounded quasi-Newton method (L-BFGS-B).  Correlations
keep their natural scale and are box-constrained away from +/-1; the
thresholds need no constraints at all in psi coordinates.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtri

from .counts import OrdinalDataset, PairCounts, compute_counts, margin_tallies
from .model import ModelDims, chain_rule_score, from_psi, to_psi, unpack_theta
from .pairwise import EvalDiagnostics, loglik_and_score


class EstimationError(RuntimeError):
    """Raised when a model cannot be estimated from the given data."""


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    gradient_tolerance is an infinity-norm threshold on the psi-gradient,
    scaled by the number of observations; objective_tolerance is the
    relative objective-change stopping rule; rho_bound caps |rho| during
    the search.
    """

    max_iterations: int = 500
    gradient_tolerance: float = 1e-6
    objective_tolerance: float = 1e-14
    rho_bound: float = 0.999

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.gradient_tolerance <= 0 or self.objective_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.rho_bound < 1.0:
            raise ValueError("rho_bound must lie in (0, 1)")


@dataclass
class FitResult:
    """Converged estimate with diagnostics."""

    theta_hat: np.ndarray
    psi_hat: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    gradient_norm: float
    sigma_pd: bool
    underflow_count: int


def initialize(counts: PairCounts, data: OrdinalDataset, dims: ModelDims) -> np.ndarray:
    """Data-driven start: quantile thresholds, zero correlations.

    Thresholds are the normal quantiles of the cumulative category
    frequencies of each margin; every margin must exhibit every category,
    otherwise the corresponding threshold is not identifiable from data.
    """
    tallies = margin_tallies(data)
    empty = np.argwhere(tallies == 0)
    if empty.size:
        j, c = empty[0]
        raise EstimationError(
            f"category {c + 1} never occurs on margin {j + 1}: "
            "threshold not identifiable from data")
    cumfreq = np.cumsum(tallies, axis=1)[:, :-1] / data.n
    theta = np.zeros(dims.n_params)
    theta[dims.n_pairs:] = ndtri(cumfreq).ravel()
    return theta


def maximize(counts: PairCounts, data: OrdinalDataset, dims: ModelDims,
             config: FitConfig | None = None) -> FitResult:
    """Maximize the pairwise log-likelihood from the data-driven start."""
    if config is None:
        config = FitConfig()
    if counts.dims != dims:
        raise ValueError(f"counts dims {counts.dims} do not match {dims}")
    theta0 = initialize(counts, data, dims)
    psi0 = to_psi(theta0, dims)
    diag = EvalDiagnostics()
    gtol = config.gradient_tolerance * dims.n

    best = {"f": -np.inf, "psi": psi0}

    def negobj(psi):
        theta = from_psi(psi, dims)
        ll, score = loglik_and_score(theta, counts, diag)
        if ll > best["f"]:
            best["f"] = ll
            best["psi"] = psi.copy()
        grad = chain_rule_score(score, psi, dims)
        return -ll, -grad

    bounds = [(-config.rho_bound, config.rho_bound)] * dims.n_pairs \
        + [(None, None)] * dims.n_thresholds
    # L-BFGS-B's relative-f stopping rule has a machine-precision floor
    # that can trigger an iteration or two before the gradient criterion;
    # restarting clears its objective history, so retry a few times while
    # iterations remain and progress is still being made.
    x0 = psi0
    remaining = config.max_iterations
    total_iters = 0
    for _ in range(4):
        res = minimize(
            negobj, x0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": remaining,
                     "ftol": config.objective_tolerance,
                     "gtol": gtol})
        total_iters += int(res.nit)
        remaining -= int(res.nit)
        if (np.max(np.abs(res.jac)) <= gtol or remaining <= 0
                or res.nit == 0):
            break
        x0 = res.x

    psi_hat = best["psi"] if best["f"] > -res.fun else res.x
    theta_hat = from_psi(psi_hat, dims)
    ll, score = loglik_and_score(theta_hat, counts, diag)
    grad_norm = float(np.max(np.abs(chain_rule_score(score, psi_hat, dims))))

    corr, _ = unpack_theta(theta_hat, dims)
    eigvals = np.linalg.eigvalsh(corr.matrix())
    return FitResult(
        theta_hat=theta_hat,
        psi_hat=psi_hat,
        loglik=ll,
        iterations=total_iters,
        converged=bool(grad_norm <= gtol),
        gradient_norm=grad_norm,
        sigma_pd=bool(eigvals.min() > 1e-10),
        underflow_count=diag.underflow_cells,
    )


def fit_dataset(data: OrdinalDataset, config: FitConfig | None = None) -> FitResult:
    """Convenience wrapper: counts, dims and maximize in one call."""
    dims = data.dims()
    counts = compute_counts(data, dims)
    return maximize(counts, data, dims, config)
