"""Conjugate Gaussian Bayesian linear regression over the PDE coefficients.

One regression batch per time step: design columns are the library terms
evaluated on the freshly observed state, the response is the discrete time
derivative corrected for the applied control.  The posterior of one step is
the prior of the next, so information accumulates across the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "GaussianBelief",
    "RegressionBatch",
    "DegenerateUpdateError",
    "posterior_update",
    "point_estimate",
    "inject_noise",
    "noise_stream",
]

MAX_PRECISION_COND = 1e14


class DegenerateUpdateError(RuntimeError):
    """Posterior precision matrix is numerically singular."""


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, float)
        cov = np.asarray(self.cov, float)
        n = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (n, n):
            raise ValueError("mean/covariance dimensions inconsistent")
        scale = max(1.0, np.linalg.norm(cov))
        if np.linalg.norm(cov - cov.T) > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov)[0] <= 0.0:
            raise ValueError("covariance is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def isotropic(cls, mean, scale: float) -> "GaussianBelief":
        mean = np.asarray(mean, float)
        return cls(mean, scale * np.eye(mean.shape[0]))


@dataclass(frozen=True)
class RegressionBatch:
    X: np.ndarray
    Y: np.ndarray
    sigma: float

    def __post_init__(self):
        X = np.asarray(self.X, float)
        Y = np.asarray(self.Y, float)
        if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != Y.shape[0]:
            raise ValueError("design matrix and response rows differ")
        if self.sigma <= 0:
            raise ValueError("likelihood noise std must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)


def posterior_update(prior: GaussianBelief, batch: RegressionBatch) -> GaussianBelief:
    """Gaussian-conjugate update.

    Posterior precision  P = X'X / sigma^2 + Sigma0^-1  and mean
    m = P^-1 (X'Y / sigma^2 + Sigma0^-1 m0), both computed through Cholesky
    solves of the SPD precision system.
    """
    X, Y, s2 = batch.X, batch.Y, batch.sigma**2
    if X.shape[1] != prior.n:
        raise ValueError("design columns do not match the belief dimension")
    eye = np.eye(prior.n)
    prior_precision = sla.cho_solve(sla.cho_factor(prior.cov), eye)
    precision = prior_precision + (X.T @ X) / s2
    if np.linalg.cond(precision) > MAX_PRECISION_COND:
        raise DegenerateUpdateError(
            f"posterior precision condition {np.linalg.cond(precision):.3e}"
        )
    try:
        factor = sla.cho_factor(precision)
    except sla.LinAlgError as err:
        raise DegenerateUpdateError(str(err)) from err
    cov = sla.cho_solve(factor, eye)
    cov = 0.5 * (cov + cov.T)
    mean = sla.cho_solve(factor, (X.T @ Y) / s2 + prior_precision @ prior.mean)
    return GaussianBelief(mean, cov)


def point_estimate(belief: GaussianBelief) -> np.ndarray:
    """The posterior mean."""
    return belief.mean.copy()


def inject_noise(X: np.ndarray, level: float, rng: np.random.Generator) -> np.ndarray:
    """Relative column noise: each entry of column j is perturbed by a centered
    Gaussian with std = level * mean(|X[:, j]|).  All-zero columns are exact.
    """
    if level < 0:
        raise ValueError("noise level must be non-negative")
    X = np.asarray(X, float)
    if level == 0:
        return X.copy()
    std = level * np.mean(np.abs(X), axis=0)
    return X + rng.standard_normal(X.shape) * std[None, :]


def noise_stream(seed: int, step: int, term: int) -> np.random.Generator:
    """Deterministic per-(step, term) noise substream.

    Keyed streams keep a term's noise draws identical across runs that share
    a seed but activate different library subsets.
    """
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(step, term))
    )
