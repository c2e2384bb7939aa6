"""Named experiment presets: the three benchmark plants.

test1  Allen-Cahn   diffusion + linear/cubic reaction, uniform forcing
test2  Burgers      weak diffusion + nonlinear advection, two patch actuators
test3  KdV          diffusion + nonlinear advection + third derivative
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline import PlantSpec
from .blr import GaussianBelief
from .integrate import TimeGrid
from .loop import LoopConfig
from .operators import ControlOperator, GridSpec, InitialProfile
from .riccati import CostWeights

__all__ = ["ExperimentPreset", "PRESETS", "get_preset"]


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    plant: PlantSpec
    prior_mean: tuple
    prior_cov_scale: float
    r_scale: float = 0.01

    def weights(self, grid=None) -> CostWeights:
        g = grid if grid is not None else self.plant.grid
        m = self.plant.control.m
        return CostWeights.grid_default(g.dx, g.d, m, self.r_scale)

    def prior(self, active_terms=None) -> GaussianBelief:
        mean = np.asarray(self.prior_mean, float)
        if active_terms is not None:
            mean = mean[[j - 1 for j in active_terms]]
        return GaussianBelief.isotropic(mean, self.prior_cov_scale)

    def loop_config(self, **overrides) -> LoopConfig:
        return LoopConfig(**overrides)


_ONES = (1.0,) * 7

PRESETS = {
    "test1": ExperimentPreset(
        name="test1",
        plant=PlantSpec(
            mu_star=(1.0, 0.0, 11.0, 0.0, -11.0, 0.0, 0.0),
            grid=GridSpec.from_step(0.0, 1.0, 0.01),
            control=ControlOperator(("ones",)),
            initial=InitialProfile("scaled-sine"),
            tgrid=TimeGrid(0.01, 0.5),
        ),
        prior_mean=_ONES,
        prior_cov_scale=200000.0,
    ),
    "test2": ExperimentPreset(
        name="test2",
        plant=PlantSpec(
            mu_star=(0.01, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
            grid=GridSpec.from_step(-1.5, 1.5, 0.025),
            control=ControlOperator(((0.25, 0.5), (0.75, 1.0))),
            initial=InitialProfile("sine-pulse"),
            tgrid=TimeGrid(0.025, 2.0),
        ),
        prior_mean=_ONES,
        prior_cov_scale=1000.0,
    ),
    "test3": ExperimentPreset(
        name="test3",
        plant=PlantSpec(
            mu_star=(0.5, 0.0, 0.0, 0.0, 0.0, 6.0, -1.0),
            grid=GridSpec.from_step(-10.0, 7.0, 0.1),
            control=ControlOperator(((1.0, 4.0),)),
            initial=InitialProfile("cosine-bump"),
            tgrid=TimeGrid(0.025, 2.0),
        ),
        prior_mean=_ONES,
        prior_cov_scale=1000.0,
    ),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
