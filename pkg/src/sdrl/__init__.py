"""Stabilize an unknown parametric nonlinear PDE while identifying its
coefficients online: Riccati feedback for the current estimate, Bayesian
linear regression on the observed response."""

from .baseline import PlantSpec, run_sdre, run_uncontrolled
from .blr import (
    DegenerateUpdateError,
    GaussianBelief,
    RegressionBatch,
    inject_noise,
    point_estimate,
    posterior_update,
)
from .integrate import (
    BlackboxPlant,
    ImplicitPlant,
    PlantError,
    StepFailureError,
    StepReport,
    TimeGrid,
    blackbox_evolve,
    implicit_euler_step,
)
from .loop import (
    LoopConfig,
    RunAborted,
    RunResult,
    assemble_regression,
    run_online,
    stopping_check,
)
from .operators import (
    ControlOperator,
    GridSpec,
    InitialProfile,
    LibraryTerm,
    OperatorLibrary,
    assemble_A,
    build_control,
    build_term,
    eval_initial,
)
from .presets import PRESETS, ExperimentPreset, get_preset
from .riccati import (
    CostWeights,
    FeedbackGain,
    RiccatiSolution,
    gain_from,
    solve_care,
)

__version__ = "0.1.0"
