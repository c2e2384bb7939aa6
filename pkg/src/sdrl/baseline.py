"""Reference runs with the true coefficients: Riccati-controlled and
uncontrolled trajectories the online method is measured against."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .integrate import ImplicitPlant, PlantError, StepFailureError, TimeGrid
from .loop import RunAborted, RunResult
from .operators import (
    ALL_TERMS,
    ControlOperator,
    GridSpec,
    InitialProfile,
    OperatorLibrary,
    eval_initial,
)
from .riccati import CostWeights, FeedbackGain, gain_from, solve_care

__all__ = ["PlantSpec", "run_sdre", "run_uncontrolled"]


@dataclass(frozen=True)
class PlantSpec:
    """A fully specified true plant: coefficients, grid, actuation, initial
    condition and time horizon."""

    mu_star: tuple
    grid: GridSpec
    control: ControlOperator
    initial: InitialProfile
    tgrid: TimeGrid

    def __post_init__(self):
        mu = tuple(float(v) for v in self.mu_star)
        if len(mu) != len(ALL_TERMS):
            raise ValueError("mu_star must have one entry per library term")
        object.__setattr__(self, "mu_star", mu)

    def library(self) -> OperatorLibrary:
        return OperatorLibrary(self.grid, self.control)

    def initial_state(self) -> np.ndarray:
        return eval_initial(self.initial, self.grid)

    def refined(self, factor: int) -> "PlantSpec":
        return PlantSpec(
            self.mu_star, self.grid.refined(factor), self.control,
            self.initial, self.tgrid,
        )


def _reference_run(
    spec: PlantSpec,
    weights: CostWeights,
    controlled: bool,
    care_tol: float,
    newton_tol: float,
) -> RunResult:
    library = spec.library()
    plant = ImplicitPlant(library, spec.mu_star, newton_tol=newton_tol)
    mu_star = np.asarray(spec.mu_star)
    d, m = spec.grid.d, library.m
    N, dt = spec.tgrid.steps, spec.tgrid.dt

    states = np.zeros((N + 1, d))
    controls = np.zeros((N, m))
    fallbacks = np.zeros(N, dtype=bool)
    cost = np.zeros(N + 1)
    walls = np.zeros(N)

    x = spec.initial_state()
    states[0] = x
    for i in range(N):
        tic = time.perf_counter()
        if controlled:
            A = library.assemble(x, mu_star).toarray()
            sol = solve_care(A, library.B, weights, care_tol)
            gain = gain_from(sol, library.B, weights)
        else:
            gain = FeedbackGain(np.zeros((m, d)), False)
        try:
            x_next = plant.step(x, gain.K, dt)
        except (StepFailureError, PlantError) as err:
            raise RunAborted(
                RunResult(
                    spec.tgrid.times()[: i + 1], states[: i + 1], controls[:i],
                    fallbacks[:i], np.tile(mu_star, (i + 1, 1)),
                    np.zeros(i + 1), cost[: i + 1], None, walls[:i],
                    ALL_TERMS, "implicit",
                ),
                err,
            ) from err
        u = -(gain.K @ x_next)
        cost[i + 1] = cost[i] + dt * (x @ weights.Q @ x + u @ weights.R @ u)
        controls[i] = u
        fallbacks[i] = gain.fallback
        x = x_next
        states[i + 1] = x
        walls[i] = time.perf_counter() - tic

    return RunResult(
        spec.tgrid.times(), states, controls, fallbacks,
        np.tile(mu_star, (N + 1, 1)), np.zeros(N + 1), cost, None, walls,
        ALL_TERMS, "implicit",
    )


def run_sdre(
    spec: PlantSpec,
    weights: CostWeights,
    care_tol: float = 1e-9,
    newton_tol: float = 1e-5,
) -> RunResult:
    """Riccati feedback recomputed at every step with the true coefficients."""
    return _reference_run(spec, weights, True, care_tol, newton_tol)


def run_uncontrolled(
    spec: PlantSpec,
    weights: CostWeights,
    newton_tol: float = 1e-5,
) -> RunResult:
    """Free evolution (u = 0); the cost accumulates the state term only."""
    return _reference_run(spec, weights, False, 1e-9, newton_tol)
