"""Time steppers: implicit Euler via Jacobian-free Newton-Krylov, and an
adaptive stiff integrator standing in for an externally observed plant.

Both are wrapped as plants exposing ``step(x, gain, dt) -> next state`` so
the control loop never sees integrator details; a genuinely external system
can replace either by implementing the same method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

__all__ = [
    "TimeGrid",
    "StepReport",
    "StepFailureError",
    "PlantError",
    "implicit_euler_step",
    "blackbox_evolve",
    "ImplicitPlant",
    "BlackboxPlant",
]

GMRES_RESTART = 30
GMRES_RTOL = 1e-8
GMRES_MAX_CYCLES = 7  # restart cycles; caps total inner iterations near 200


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, t_end]."""

    dt: float
    t_end: float

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
            raise ValueError(f"t_end/dt = {n} is not an integer")

    @property
    def steps(self) -> int:
        return round(self.t_end / self.dt)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)


@dataclass(frozen=True)
class StepReport:
    newton_iters: int
    final_residual: float
    krylov_iters_total: int
    converged: bool


class StepFailureError(RuntimeError):
    """Newton did not converge within the iteration cap."""

    def __init__(self, report: StepReport):
        super().__init__(
            f"implicit step failed: residual {report.final_residual:.3e} "
            f"after {report.newton_iters} Newton iterations"
        )
        self.report = report


class PlantError(RuntimeError):
    """The adaptive integrator could not advance the plant."""


def implicit_euler_step(
    x: np.ndarray,
    dt: float,
    rhs,
    newton_tol: float = 1e-5,
    max_iters: int = 500,
):
    """One backward-Euler step: solve  z = x + dt * rhs(z)  for z.

    Newton iterations start from x; each linearized system is solved with
    restarted GMRES using only rhs evaluations, the Jacobian action being the
    forward difference  J v ~ (G(z + eps v) - G(z)) / eps  with
    eps = sqrt(machine eps) * (1 + |z|) / |v|.

    Returns (z, StepReport); raises StepFailureError on non-convergence.
    """
    x = np.asarray(x, float)
    sqrt_eps = np.sqrt(np.finfo(float).eps)

    def residual(z):
        return z - x - dt * rhs(z)

    z = x.copy()
    g = residual(z)
    res = np.linalg.norm(g, np.inf)
    newton_iters = 0
    krylov_total = 0

    while res > newton_tol and newton_iters < max_iters:
        norm_z = np.linalg.norm(z)
        matvecs = 0

        def jac_action(v):
            nonlocal matvecs
            matvecs += 1
            norm_v = np.linalg.norm(v)
            if norm_v == 0.0:
                return np.zeros_like(v)
            eps = sqrt_eps * (1.0 + norm_z) / norm_v
            return (residual(z + eps * v) - g) / eps

        op = spla.LinearOperator((x.size, x.size), matvec=jac_action, dtype=float)
        delta, _ = spla.gmres(
            op,
            -g,
            rtol=GMRES_RTOL,
            atol=0.0,
            restart=GMRES_RESTART,
            maxiter=GMRES_MAX_CYCLES,
        )
        krylov_total += matvecs
        z = z + delta
        g = residual(z)
        res = np.linalg.norm(g, np.inf)
        newton_iters += 1

    converged = res <= newton_tol
    report = StepReport(newton_iters, float(res), krylov_total, converged)
    if not converged:
        raise StepFailureError(report)
    return z, report


def blackbox_evolve(
    x: np.ndarray,
    u_const: np.ndarray,
    dt: float,
    model,
    rtol: float = 1e-6,
    atol: float = 1e-8,
    jac_sparsity=None,
) -> np.ndarray:
    """Advance the true dynamics under a control held constant over [0, dt].

    ``model(z, u)`` evaluates the plant right-hand side.  Integration uses an
    adaptive L-stable implicit scheme (Radau IIA) with the given tolerances.
    """
    sol = solve_ivp(
        lambda t, z: model(z, u_const),
        (0.0, dt),
        np.asarray(x, float),
        method="Radau",
        rtol=rtol,
        atol=atol,
        jac_sparsity=jac_sparsity,
    )
    if not sol.success:
        raise PlantError(f"stiff integrator failed: {sol.message}")
    return sol.y[:, -1]


def _zero_boundaries(x: np.ndarray) -> np.ndarray:
    x[0] = 0.0
    x[-1] = 0.0
    return x


class ImplicitPlant:
    """True dynamics advanced by implicit Euler; the feedback enters the
    implicit solve, so the injected control over a step is -K x_next."""

    def __init__(self, library, mu_star, newton_tol: float = 1e-5,
                 max_iters: int = 500):
        self.library = library
        self.mu_star = np.asarray(mu_star, float)
        self.newton_tol = newton_tol
        self.max_iters = max_iters
        self.last_report: StepReport | None = None

    def step(self, x: np.ndarray, K: np.ndarray, dt: float) -> np.ndarray:
        B = self.library.B

        def rhs(z):
            return self.library.apply(z, self.mu_star) - B @ (K @ z)

        x_next, report = implicit_euler_step(
            x, dt, rhs, self.newton_tol, self.max_iters
        )
        self.last_report = report
        return _zero_boundaries(x_next)


class BlackboxPlant:
    """True dynamics advanced by the adaptive stiff integrator; the control
    -K x is frozen at the interval start, as an external system would see it."""

    def __init__(self, library, mu_star, rtol: float = 1e-6, atol: float = 1e-8):
        self.library = library
        self.mu_star = np.asarray(mu_star, float)
        self.rtol = rtol
        self.atol = atol
        self._sparsity = library.jac_sparsity()

    def step(self, x: np.ndarray, K: np.ndarray, dt: float) -> np.ndarray:
        u = -(K @ x)
        B = self.library.B
        x_next = blackbox_evolve(
            x,
            u,
            dt,
            lambda z, uc: self.library.apply(z, self.mu_star) + B @ uc,
            rtol=self.rtol,
            atol=self.atol,
            jac_sparsity=self._sparsity,
        )
        return _zero_boundaries(x_next)
