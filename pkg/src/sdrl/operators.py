"""Finite-difference building blocks for the seven-term parametric PDE.

The continuous model is a 1-D PDE on (a, b) with homogeneous Dirichlet
conditions whose right-hand side is a coefficient-weighted sum of seven
candidate terms (diffusion, advection, linear/quadratic/cubic reaction,
nonlinear advection, third derivative).  Discretizing on a uniform grid
turns each candidate into a state-dependent matrix A_j(x), so the dynamics
read  x' = sum_j mu_j A_j(x) x + B u.

Boundary rows and columns of every matrix are zeroed, which keeps the two
boundary entries of the state pinned at zero while the algebra stays square.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GridSpec",
    "LibraryTerm",
    "ControlOperator",
    "InitialProfile",
    "OperatorLibrary",
    "build_term",
    "design_term",
    "assemble_A",
    "build_control",
    "eval_initial",
]

ALL_TERMS = (1, 2, 3, 4, 5, 6, 7)


@dataclass(frozen=True)
class GridSpec:
    """Uniform 1-D grid on [a, b] including both boundary points."""

    a: float
    b: float
    dx: float
    d: int

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError("grid step must be positive")
        n = (self.b - self.a) / self.dx
        if abs(n - round(n)) > 1e-12 * max(1.0, abs(n)):
            raise ValueError(f"(b - a) / dx = {n} is not an integer")
        if self.d != round(n) + 1:
            raise ValueError(f"point count {self.d} inconsistent with step {self.dx}")

    @classmethod
    def from_step(cls, a: float, b: float, dx: float) -> "GridSpec":
        n = (b - a) / dx
        return cls(a, b, dx, round(n) + 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.d)

    def refined(self, factor: int) -> "GridSpec":
        """Grid with step dx/factor on the same interval."""
        return GridSpec.from_step(self.a, self.b, self.dx / factor)

    def check_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"state has shape {x.shape}, expected ({self.d},)")
        return x


class LibraryTerm(enum.IntEnum):
    """The seven candidate right-hand-side terms, in their fixed order."""

    LAPLACIAN = 1
    ADVECTION = 2
    IDENTITY = 3
    QUADRATIC = 4
    CUBIC = 5
    NONLINEAR_ADVECTION = 6
    THIRD_DERIVATIVE = 7

    @property
    def kind(self) -> str:
        return _TERM_KINDS[self]


_TERM_KINDS = {
    LibraryTerm.LAPLACIAN: "laplacian",
    LibraryTerm.ADVECTION: "advection",
    LibraryTerm.IDENTITY: "identity",
    LibraryTerm.QUADRATIC: "quadratic-reaction",
    LibraryTerm.CUBIC: "cubic-reaction",
    LibraryTerm.NONLINEAR_ADVECTION: "nonlinear-advection",
    LibraryTerm.THIRD_DERIVATIVE: "third-derivative",
}


def _boundary_mask(d: int) -> sp.dia_matrix:
    w = np.ones(d)
    w[0] = w[-1] = 0.0
    return sp.diags(w)


def _apply_bc(mat: sp.spmatrix, d: int) -> sp.csr_matrix:
    """Zero the first/last rows and columns (homogeneous Dirichlet)."""
    mask = _boundary_mask(d)
    out = (mask @ mat @ mask).tocsr()
    out.eliminate_zeros()
    return out


@lru_cache(maxsize=None)
def _constant_matrices(grid: GridSpec):
    """Grid-dependent constant stencils, boundary rows/columns zeroed."""
    d, dx = grid.d, grid.dx
    lap = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(d, d)) / dx**2
    t_neg = sp.diags([-1.0, 1.0], [-1, 0], shape=(d, d)) / dx
    t_pos = sp.diags([-1.0, 1.0], [0, 1], shape=(d, d)) / dx
    ident = sp.eye(d)
    third = sp.diags([1.0, -2.0, 0.0, 2.0, -1.0], [-2, -1, 0, 1, 2], shape=(d, d))
    third = third * (-1.0 / (2.0 * dx**3))
    return {
        "laplacian": _apply_bc(lap, d),
        "t_neg": _apply_bc(t_neg, d),
        "t_pos": _apply_bc(t_pos, d),
        "identity": _apply_bc(ident, d),
        "third": _apply_bc(third, d),
    }


def _diag_bc(values: np.ndarray) -> sp.csr_matrix:
    v = values.copy()
    v[0] = v[-1] = 0.0
    return sp.diags(v).tocsr()


def _nonlinear_advection(grid: GridSpec, x: np.ndarray, mu6: float) -> sp.csr_matrix:
    """Row-wise upwinded diag(x) * T: row i uses the backward stencil when
    (mu6 * x)_i > 0 and the forward one when (mu6 * x)_i < 0.  Rows where the
    product is exactly zero fall back to the backward stencil (the row is a
    zero row whenever x_i = 0, so the choice is observationally neutral)."""
    const = _constant_matrices(grid)
    s = mu6 * x
    forward = s < 0
    back_rows = _diag_bc(np.where(forward, 0.0, x))
    fwd_rows = _diag_bc(np.where(forward, x, 0.0))
    out = (back_rows @ const["t_neg"] + fwd_rows @ const["t_pos"]).tocsr()
    out.eliminate_zeros()
    return out


def build_term(
    term: LibraryTerm | int, grid: GridSpec, x: np.ndarray, mu_j: float
) -> sp.csr_matrix:
    """Unweighted matrix A_j(x) of one library term.

    ``mu_j`` only selects the stencil direction for the sign-switching terms
    (advection, nonlinear advection); the returned matrix is never scaled by
    it.  Advection with mu_j = 0 has no defined direction and contributes the
    zero matrix.
    """
    term = LibraryTerm(term)
    x = grid.check_state(x)
    const = _constant_matrices(grid)
    d = grid.d
    if term is LibraryTerm.LAPLACIAN:
        return const["laplacian"]
    if term is LibraryTerm.ADVECTION:
        if mu_j > 0:
            return const["t_neg"]
        if mu_j < 0:
            return const["t_pos"]
        return sp.csr_matrix((d, d))
    if term is LibraryTerm.IDENTITY:
        return const["identity"]
    if term is LibraryTerm.QUADRATIC:
        return _diag_bc(x)
    if term is LibraryTerm.CUBIC:
        return _diag_bc(x * x)
    if term is LibraryTerm.NONLINEAR_ADVECTION:
        return _nonlinear_advection(grid, x, mu_j)
    return const["third"]


def design_term(
    term: LibraryTerm | int, grid: GridSpec, x: np.ndarray, mu_hint: float
) -> sp.csr_matrix:
    """A_j(x) under the regression sign convention.

    Identical to :func:`build_term` except for the advection term, whose
    stencil is chosen from the sign of the *current estimate*: backward when
    mu_hint >= 0, forward otherwise.  A zero estimate must still produce a
    nonzero design column, else the term could never re-enter the model.
    """
    term = LibraryTerm(term)
    if term is LibraryTerm.ADVECTION:
        const = _constant_matrices(grid)
        grid.check_state(x)
        return const["t_neg"] if mu_hint >= 0 else const["t_pos"]
    return build_term(term, grid, x, mu_hint)


def assemble_A(grid: GridSpec, x: np.ndarray, mu: np.ndarray) -> sp.csr_matrix:
    """Coefficient-weighted sum  A(x) = sum_j mu_j A_j(x)."""
    x = grid.check_state(x)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (len(ALL_TERMS),):
        raise ValueError(f"expected {len(ALL_TERMS)} coefficients, got {mu.shape}")
    out = sp.csr_matrix((grid.d, grid.d))
    for j, mu_j in zip(ALL_TERMS, mu):
        if mu_j != 0.0:
            out = out + mu_j * build_term(j, grid, x, mu_j)
    return out.tocsr()


@dataclass(frozen=True)
class ControlOperator:
    """Spatial actuation profiles: each column is either the string "ones"
    (uniform forcing) or an (lo, hi) interval indicator."""

    columns: tuple

    def __post_init__(self):
        if len(self.columns) == 0:
            raise ValueError("control operator needs at least one column")

    @property
    def m(self) -> int:
        return len(self.columns)


_INDICATOR_TOL = 1e-9


def build_control(spec: ControlOperator, grid: GridSpec) -> np.ndarray:
    """Realize the control operator as a dense d x m matrix on the grid."""
    xi = grid.points()
    cols = []
    for col in spec.columns:
        if col == "ones":
            cols.append(np.ones(grid.d))
        else:
            lo, hi = float(col[0]), float(col[1])
            if lo > hi:
                raise ValueError(f"indicator interval [{lo}, {hi}] is empty")
            if lo < grid.a - _INDICATOR_TOL or hi > grid.b + _INDICATOR_TOL:
                raise ValueError(
                    f"indicator [{lo}, {hi}] outside the domain [{grid.a}, {grid.b}]"
                )
            inside = (xi >= lo - _INDICATOR_TOL) & (xi <= hi + _INDICATOR_TOL)
            cols.append(inside.astype(float))
    B = np.column_stack(cols)
    B[0, :] = 0.0
    B[-1, :] = 0.0
    return B


@dataclass(frozen=True)
class InitialProfile:
    """Named closed-form initial condition, evaluated pointwise on a grid."""

    name: str

    def __post_init__(self):
        if self.name not in _PROFILES:
            raise KeyError(
                f"unknown initial profile {self.name!r}; "
                f"known: {sorted(_PROFILES)}"
            )


def _scaled_sine(xi):
    return 0.2 * np.sin(np.pi * xi)


def _sine_pulse(xi):
    return np.sin(np.pi * xi) * ((xi >= -_INDICATOR_TOL) & (xi <= 1 + _INDICATOR_TOL))


def _cosine_bump(xi):
    window = (xi >= -_INDICATOR_TOL) & (xi <= 6 + _INDICATOR_TOL)
    return window * (np.cos(np.pi / 3.0 * (xi - 3.0)) + 1.0)


_PROFILES = {
    "scaled-sine": _scaled_sine,
    "sine-pulse": _sine_pulse,
    "cosine-bump": _cosine_bump,
}


def eval_initial(profile: InitialProfile, grid: GridSpec) -> np.ndarray:
    x0 = np.asarray(_PROFILES[profile.name](grid.points()), dtype=float)
    x0[0] = x0[-1] = 0.0
    return x0


class OperatorLibrary:
    """All seven term builders plus the realized control operator on one grid.

    Thin stateless facade over the module-level builders; exists so the
    control loop can pass a single object around and so the realized B matrix
    is built once.
    """

    def __init__(self, grid: GridSpec, control: ControlOperator):
        self.grid = grid
        self.control = control
        self.B = build_control(control, grid)

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def term(self, j: int, x: np.ndarray, mu_j: float) -> sp.csr_matrix:
        return build_term(j, self.grid, x, mu_j)

    def assemble(self, x: np.ndarray, mu: np.ndarray) -> sp.csr_matrix:
        return assemble_A(self.grid, x, mu)

    def design_column(self, j: int, x: np.ndarray, mu_hint: float) -> np.ndarray:
        return design_term(j, self.grid, x, mu_hint) @ x

    def apply(self, x: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """A(x; mu) x without keeping the assembled matrix."""
        return self.assemble(x, mu) @ x

    def jac_sparsity(self) -> sp.csr_matrix:
        """Pentadiagonal nonzero pattern of A(x), for banded FD Jacobians."""
        d = self.grid.d
        pattern = sp.diags([1.0] * 5, [-2, -1, 0, 1, 2], shape=(d, d))
        return _apply_bc(pattern, d) + sp.eye(d, format="csr")
