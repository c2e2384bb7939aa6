"""The online control-observe-estimate loop.

Each step: synthesize a Riccati gain for the current coefficient estimate,
apply it to the (black-box) plant for one interval, regress the observed
response onto the library columns, and fold the batch into the Gaussian
belief.  Identification freezes once successive estimates agree to within
tol_mu in the sup norm; control keeps running to the end of the horizon.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .blr import (
    DegenerateUpdateError,
    GaussianBelief,
    RegressionBatch,
    inject_noise,
    noise_stream,
    point_estimate,
    posterior_update,
)
from .integrate import PlantError, StepFailureError, TimeGrid
from .operators import ALL_TERMS, OperatorLibrary
from .riccati import CostWeights, FeedbackGain, gain_from, solve_care

__all__ = [
    "LoopConfig",
    "RunResult",
    "RunAborted",
    "assemble_regression",
    "run_online",
    "stopping_check",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoopConfig:
    tol_mu: float = 1e-5
    noise_level: float = 0.01
    mode: str = "implicit"  # "implicit" | "blackbox"
    active_terms: tuple = ALL_TERMS
    first_step_zero_control: bool = True
    care_tol: float = 1e-9
    newton_tol: float = 1e-5
    newton_max_iters: int = 500
    sigma: float = 1.0  # BLR likelihood noise std

    def __post_init__(self):
        if self.tol_mu <= 0:
            raise ValueError("tol_mu must be positive")
        if self.mode not in ("implicit", "blackbox"):
            raise ValueError(f"unknown mode {self.mode!r}")
        terms = tuple(sorted(int(j) for j in self.active_terms))
        if not terms or any(j not in ALL_TERMS for j in terms):
            raise ValueError(f"active_terms must be a non-empty subset of 1..7")
        object.__setattr__(self, "active_terms", terms)


@dataclass
class RunResult:
    """Everything one run produces, step-indexed and length-consistent:
    states/estimates/cost carry N+1 entries, controls/gains/wall times N."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    gain_fallbacks: np.ndarray
    estimates: np.ndarray
    cov_traces: np.ndarray
    cumulative_cost: np.ndarray
    stop_index: int | None
    wall_times: np.ndarray
    active_terms: tuple
    mode: str

    @property
    def steps(self) -> int:
        return self.controls.shape[0]

    @property
    def terminal_estimate(self) -> np.ndarray:
        return self.estimates[-1]

    @property
    def terminal_cost(self) -> float:
        return float(self.cumulative_cost[-1])

    def terminal_q_norm_sq(self, Q: np.ndarray) -> float:
        x = self.states[-1]
        return float(x @ Q @ x)


class RunAborted(RuntimeError):
    """A step or update failed; the partial trajectory is attached."""

    def __init__(self, partial: RunResult, cause: Exception):
        super().__init__(f"run aborted at step {partial.steps}: {cause}")
        self.partial = partial
        self.cause = cause


def stopping_check(mu_new, mu_old, tol_mu: float) -> bool:
    """True once successive estimates differ by less than tol_mu in sup norm."""
    return bool(np.linalg.norm(np.asarray(mu_new) - np.asarray(mu_old), np.inf) < tol_mu)


def expand_coefficients(mu_active, active_terms) -> np.ndarray:
    """Place an active-subset estimate into a full 7-vector (inactive -> 0)."""
    full = np.zeros(len(ALL_TERMS))
    for value, j in zip(mu_active, active_terms):
        full[j - 1] = value
    return full


def assemble_regression(
    x_i: np.ndarray,
    x_next: np.ndarray,
    K_i: np.ndarray,
    dt: float,
    B: np.ndarray,
    mode: str,
    library: OperatorLibrary,
    active_terms,
    mu_current: np.ndarray,
    noise_level: float,
    sigma: float,
    seed: int,
    step_index: int,
) -> RegressionBatch:
    """One regression batch from a single observed transition.

    Design columns are A_j(x_next) x_next for the active terms; the two
    sign-switching terms take their stencil direction from the current
    estimate.  The response removes the control contribution: the implicit
    plant injects -K x_next over the step, the black-box plant -K x_i.
    """
    cols = []
    for pos, j in enumerate(active_terms):
        cols.append(library.design_column(j, x_next, float(mu_current[pos])))
    X = np.column_stack(cols)
    if noise_level > 0:
        for pos, j in enumerate(active_terms):
            X[:, pos : pos + 1] = inject_noise(
                X[:, pos : pos + 1], noise_level, noise_stream(seed, step_index, j)
            )
    x_ref = x_next if mode == "implicit" else x_i
    Y = (x_next - x_i) / dt + B @ (K_i @ x_ref)
    return RegressionBatch(X, Y, sigma)


def run_online(
    plant,
    library: OperatorLibrary,
    weights: CostWeights,
    tgrid: TimeGrid,
    x0: np.ndarray,
    prior: GaussianBelief,
    cfg: LoopConfig,
    seed: int,
) -> RunResult:
    """Identify and control in one pass over the time grid."""
    terms = cfg.active_terms
    if prior.n != len(terms):
        raise ValueError("prior dimension does not match the active library size")
    grid = library.grid
    d, m = grid.d, library.m
    N = tgrid.steps
    dt = tgrid.dt

    states = np.zeros((N + 1, d))
    controls = np.zeros((N, m))
    fallbacks = np.zeros(N, dtype=bool)
    estimates = np.zeros((N + 1, len(terms)))
    cov_traces = np.zeros(N + 1)
    cost = np.zeros(N + 1)
    walls = np.zeros(N)

    x = grid.check_state(x0).copy()
    x[0] = x[-1] = 0.0
    states[0] = x
    belief = prior
    mu = point_estimate(belief)
    estimates[0] = mu
    cov_traces[0] = np.trace(belief.cov)
    stop_index = None

    def partial(i: int) -> RunResult:
        return RunResult(
            tgrid.times()[: i + 1],
            states[: i + 1].copy(),
            controls[:i].copy(),
            fallbacks[:i].copy(),
            estimates[: i + 1].copy(),
            cov_traces[: i + 1].copy(),
            cost[: i + 1].copy(),
            stop_index,
            walls[:i].copy(),
            terms,
            cfg.mode,
        )

    for i in range(N):
        tic = time.perf_counter()
        if i == 0 and cfg.first_step_zero_control:
            gain = FeedbackGain(np.zeros((m, d)), False)
        else:
            A = library.assemble(x, expand_coefficients(mu, terms)).toarray()
            sol = solve_care(A, library.B, weights, cfg.care_tol)
            gain = gain_from(sol, library.B, weights)
            if gain.fallback:
                log.info("step %d: no stabilizing Riccati solution, zero gain", i)
        try:
            x_next = plant.step(x, gain.K, dt)
        except (StepFailureError, PlantError) as err:
            raise RunAborted(partial(i), err) from err

        u = -(gain.K @ (x_next if cfg.mode == "implicit" else x))
        cost[i + 1] = cost[i] + dt * (x @ weights.Q @ x + u @ weights.R @ u)
        controls[i] = u
        fallbacks[i] = gain.fallback

        if stop_index is None:
            batch = assemble_regression(
                x, x_next, gain.K, dt, library.B, cfg.mode, library, terms,
                mu, cfg.noise_level, cfg.sigma, seed, i,
            )
            try:
                belief = posterior_update(belief, batch)
            except DegenerateUpdateError as err:
                raise RunAborted(partial(i), err) from err
            mu_new = point_estimate(belief)
            if stopping_check(mu_new, mu, cfg.tol_mu):
                stop_index = i + 1
                log.info("estimation stopped after %d iterations", stop_index)
            mu = mu_new
        estimates[i + 1] = mu
        cov_traces[i + 1] = np.trace(belief.cov)

        x = x_next
        states[i + 1] = x
        walls[i] = time.perf_counter() - tic

    return RunResult(
        tgrid.times(), states, controls, fallbacks, estimates, cov_traces,
        cost, stop_index, walls, terms, cfg.mode,
    )
