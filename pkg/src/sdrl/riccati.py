"""Continuous algebraic Riccati equation solver and feedback-gain synthesis.

Solves  A' Pi + Pi A - Pi B R^-1 B' Pi + Q = 0  for the stabilizing solution
by ordering the real Schur form of the Hamiltonian matrix and reading the
stable invariant subspace, followed by Newton-Kleinman sweeps whenever the
subspace solution leaves a residual above tolerance.  A solve can fail (the
state-dependent equation has no stabilizing solution for some coefficient
estimates); callers then substitute the zero gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = [
    "CostWeights",
    "RiccatiSolution",
    "FeedbackGain",
    "solve_care",
    "gain_from",
    "care_residual",
]

# Declare failure when the refined residual is still above this multiple of
# max(1, ||Q||_F), when the stable subspace has the wrong dimension, or when
# the subspace basis block is numerically singular.
FAILURE_RESIDUAL = 1e-6
MAX_X1_COND = 1e12
_NEWTON_KLEINMAN_MAX = 20


@dataclass(frozen=True)
class CostWeights:
    """Quadratic running-cost weights: Q (state, PSD) and R (control, PD)."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q, R = np.asarray(self.Q, float), np.asarray(self.R, float)
        for name, M in (("Q", Q), ("R", R)):
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError(f"{name} must be square")
            scale = max(1.0, np.linalg.norm(M))
            if np.linalg.norm(M - M.T) > 1e-12 * scale:
                raise ValueError(f"{name} is not symmetric")
        if not np.isfinite(np.linalg.cond(R)):
            raise ValueError("R is singular")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def grid_default(cls, dx: float, d: int, m: int, r_scale: float = 0.01):
        """Q = dx * I (discretized L2 state cost) and R = r_scale * I."""
        return cls(dx * np.eye(d), r_scale * np.eye(m))


@dataclass(frozen=True)
class RiccatiSolution:
    Pi: np.ndarray
    residual: float
    status: str  # "solved" | "failed"

    @property
    def solved(self) -> bool:
        return self.status == "solved"


@dataclass(frozen=True)
class FeedbackGain:
    """u = -K x; ``fallback`` marks the zero gain substituted on solve failure."""

    K: np.ndarray
    fallback: bool


def care_residual(A, B, Q, R, Pi) -> float:
    S = B @ sla.solve(R, B.T, assume_a="pos")
    return np.linalg.norm(A.T @ Pi + Pi @ A - Pi @ S @ Pi + Q, "fro")


def _failed(d: int) -> RiccatiSolution:
    return RiccatiSolution(np.zeros((d, d)), np.inf, "failed")


def solve_care(A, B, w: CostWeights, tol: float = 1e-9) -> RiccatiSolution:
    """Stabilizing CARE solution, or status="failed" when none is found.

    Never raises for well-formed input: every numerical breakdown maps to the
    failed status so the caller can fall back to the zero gain.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B[:, None]
    d, m = B.shape
    if A.shape != (d, d) or w.Q.shape != (d, d) or w.R.shape != (m, m):
        raise ValueError("inconsistent CARE dimensions")

    S = B @ sla.solve(w.R, B.T, assume_a="pos")
    H = np.block([[A, -S], [-w.Q, -A.T]])
    try:
        _, U, sdim = sla.schur(H, sort="lhp")
    except (sla.LinAlgError, ValueError):
        return _failed(d)
    if sdim != d:
        return _failed(d)
    X1 = U[:d, :d]
    X2 = U[d:, :d]
    if np.linalg.cond(X1) > MAX_X1_COND:
        return _failed(d)
    try:
        Pi = sla.solve(X1.T, X2.T).T
    except sla.LinAlgError:
        return _failed(d)
    Pi = 0.5 * (Pi + Pi.T)

    target = tol * max(1.0, np.linalg.norm(w.Q, "fro"))
    res = care_residual(A, B, w.Q, w.R, Pi)
    for _ in range(_NEWTON_KLEINMAN_MAX):
        if res <= target:
            break
        K = sla.solve(w.R, B.T @ Pi, assume_a="pos")
        Acl = A - B @ K
        try:
            Pi_new = sla.solve_continuous_lyapunov(Acl.T, -(w.Q + K.T @ w.R @ K))
        except (sla.LinAlgError, ValueError):
            break
        Pi_new = 0.5 * (Pi_new + Pi_new.T)
        res_new = care_residual(A, B, w.Q, w.R, Pi_new)
        if not np.isfinite(res_new) or res_new >= res:
            break
        Pi, res = Pi_new, res_new

    if not np.isfinite(res) or res > FAILURE_RESIDUAL * max(
        1.0, np.linalg.norm(w.Q, "fro")
    ):
        return _failed(d)
    closed_loop = A - S @ Pi
    if np.max(np.linalg.eigvals(closed_loop).real) >= 0.0:
        return _failed(d)
    return RiccatiSolution(Pi, res, "solved")


def gain_from(sol: RiccatiSolution, B, w: CostWeights) -> FeedbackGain:
    """K = R^-1 B' Pi, or the zero gain (fallback) when the solve failed."""
    B = np.asarray(B, float)
    if B.ndim == 1:
        B = B[:, None]
    d, m = B.shape
    if not sol.solved:
        return FeedbackGain(np.zeros((m, d)), True)
    K = sla.solve(w.R, B.T @ sol.Pi, assume_a="pos")
    return FeedbackGain(K, False)
