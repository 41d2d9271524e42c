"""Explicit finite differences for ``u_t = a(u) Δu + f(u)`` with Dirichlet data.

Two update rules are available:

``"enthalpy"`` (default when the coefficient provides ``β = ∫ du/a``)
    ``β(u*) = β(u) + dt Δ_h u`` followed by ``u^{n+1} = u* + dt f(u)``. This
    is the same equation written as ``∂_t β(u) = Δu``; for the power law
    ``β(u) = u^(1/m)`` it is the classical explicit scheme for ``s_t = Δ(s^m)``.
    To first order in ``dt`` it coincides with the update below wherever
    ``u != 0``, and it is the one that lets the free boundary move.

``"nondivergence"``
    ``u^{n+1} = u + dt (a(u) Δ_h u + f(u))`` exactly as written. A node with
    ``u = 0`` has ``a(u) = 0`` and never leaves 0, so the support of the
    solution is frozen; kept for comparison and for non-degenerate ``a``.

Time steps follow ``dt = 0.4 h² / (2 d max a)``, under which both rules are
monotone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .barenblatt import BarenblattParams, barenblatt_value
from .coefficients import CoefficientFunction
from .grid import FloatArray, ScalarField, SpaceTimeGrid, laplacian_array, make_grid, time_derivative_array

logger = logging.getLogger(__name__)

CFL_FACTOR = 0.4
EPS_A = 1e-12


class SolverError(RuntimeError):
    def __init__(self, message: str, time: float | None = None) -> None:
        super().__init__(message if time is None else f"{message} (t = {time:.17g})")
        self.time = time


@dataclass(frozen=True, eq=False)
class PMEProblem:
    """Initial-boundary value problem on ``[-R, R]`` (``d = 1``) or the ``d``-ball.

    ``u_gamma(t)`` returns the boundary values at time ``t``: two values
    (left, right) in 1D, one value (at ``r = R``) in radial mode. ``None``
    means homogeneous data.
    """

    coeff: CoefficientFunction
    u0: FloatArray = field(repr=False)
    t0: float
    T: float
    R: float
    d: int = 1
    u_gamma: Callable[[float], FloatArray] | None = None
    scheme: str = "auto"

    def __post_init__(self) -> None:
        u0 = np.array(self.u0, dtype=np.float64)
        if u0.ndim != 1 or u0.size < 5:
            raise ValueError("u0 must be a 1D array with at least 5 nodes")
        if not np.all(np.isfinite(u0)):
            raise ValueError("u0 must be finite")
        if not np.all(np.isfinite(self.coeff.a(u0))):
            raise ValueError("a is not finite on the range of u0")
        u0.flags.writeable = False
        object.__setattr__(self, "u0", u0)
        if not self.T > self.t0:
            raise ValueError(f"T must exceed t0, got [{self.t0}, {self.T}]")
        if self.scheme not in ("auto", "enthalpy", "nondivergence"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.resolved_scheme == "enthalpy" and self.coeff.enthalpy is None:
            raise ValueError("enthalpy scheme needs a coefficient with an enthalpy pair")
        g0 = self.boundary_values(self.t0)
        if not np.array_equal(g0, u0[self.boundary_index]):
            raise ValueError("boundary data at t0 must equal u0 on the boundary")

    @property
    def nx(self) -> int:
        return self.u0.size

    @property
    def grid_x(self) -> FloatArray:
        return make_grid(self.t0, self.T, 3, self.R, self.nx, self.d).x

    @property
    def h(self) -> float:
        return make_grid(self.t0, self.T, 3, self.R, self.nx, self.d).h

    @property
    def boundary_index(self) -> list[int]:
        return [self.nx - 1] if self.d > 1 else [0, self.nx - 1]

    @property
    def resolved_scheme(self) -> str:
        if self.scheme != "auto":
            return self.scheme
        return "enthalpy" if self.coeff.enthalpy is not None else "nondivergence"

    def boundary_values(self, t: float) -> FloatArray:
        if self.u_gamma is None:
            return np.zeros(len(self.boundary_index))
        return np.asarray(self.u_gamma(t), dtype=np.float64).reshape(len(self.boundary_index))

    def grid(self, nt: int) -> SpaceTimeGrid:
        return make_grid(self.t0, self.T, nt, self.R, self.nx, self.d)


def barenblatt_problem(
    p: BarenblattParams, coeff: CoefficientFunction, t0: float, t1: float, R: float, nx: int, scheme: str = "auto"
) -> PMEProblem:
    """Problem whose exact solution is the Barenblatt profile on the grid."""
    x = make_grid(t0, t1, 3, R, nx, p.d).x
    u0 = barenblatt_value(p, t0, x)
    ends = [R] if p.d > 1 else [-R, R]

    def u_gamma(t: float) -> FloatArray:
        return np.array([barenblatt_value(p, t, e) for e in ends])

    return PMEProblem(coeff, u0, t0, t1, R, p.d, u_gamma, scheme)


def cfl_dt(problem: PMEProblem, layer: FloatArray, h: float) -> float:
    amax = float(np.max(problem.coeff.a(np.asarray(layer, dtype=np.float64))))
    return CFL_FACTOR * h**2 / (2.0 * problem.d * max(amax, EPS_A))


def step_explicit(layer: FloatArray, problem: PMEProblem, dt: float, h: float, t: float | None = None) -> FloatArray:
    """Advance one layer by ``dt``; boundary nodes take ``u_gamma(t + dt)``."""
    u = np.asarray(layer, dtype=np.float64)
    limit = cfl_dt(problem, u, h)
    if dt > limit * (1.0 + 1e-12):
        raise SolverError(f"dt = {dt:.6g} violates the CFL bound {limit:.6g}", t)
    t = problem.t0 if t is None else t
    grid = make_grid(problem.t0, problem.T, 3, problem.R, u.size, problem.d)
    lap = laplacian_array(u, grid)
    coeff = problem.coeff
    if problem.resolved_scheme == "enthalpy":
        new = coeff.enthalpy_inv(coeff.enthalpy(u) + dt * lap)
        if not coeff.f_is_zero:
            new = new + dt * np.asarray(coeff.f(u), dtype=np.float64)
    else:
        rhs = np.asarray(coeff.a(u), dtype=np.float64) * lap
        if not coeff.f_is_zero:
            rhs = rhs + np.asarray(coeff.f(u), dtype=np.float64)
        new = u + dt * rhs
    new = np.asarray(new, dtype=np.float64)
    new[problem.boundary_index] = problem.boundary_values(t + dt)
    if not np.all(np.isfinite(new)):
        raise SolverError("non-finite values after explicit step; the scheme went unstable", t + dt)
    return new


def solve(problem: PMEProblem, nt_output: int, max_steps: int = 50_000_000) -> ScalarField:
    """March with ``dt = cfl_dt`` and interpolate onto ``nt_output`` uniform layers."""
    grid = problem.grid(nt_output)
    t_out = grid.t
    out = np.empty(grid.shape)
    out[0] = problem.u0
    h = grid.h
    u = problem.u0.copy()
    t = problem.t0
    j = 1
    steps = 0
    while j < nt_output:
        dt = min(cfl_dt(problem, u, h), problem.T - t)
        new = step_explicit(u, problem, dt, h, t)
        t_new = problem.T if problem.T - (t + dt) <= 1e-14 * max(1.0, abs(problem.T)) else t + dt
        while j < nt_output and t_out[j] <= t_new + 1e-14 * max(1.0, abs(t_new)):
            w = (t_out[j] - t) / (t_new - t)
            out[j] = (1.0 - w) * u + w * new
            j += 1
        u, t = new, t_new
        steps += 1
        if steps > max_steps:
            raise SolverError(f"exceeded {max_steps} steps", t)
    logger.debug("solve: %d explicit steps to t = %.6g", steps, t)
    return ScalarField(grid, out)


@dataclass(frozen=True)
class CompatibilityReport:
    passed: bool
    max_defect: float
    tolerance: float
    checked_nodes: int


def compatibility_check(problem: PMEProblem, alpha: float | None = None) -> CompatibilityReport:
    """First-order compatibility of ``u0`` and ``u_gamma`` at boundary nodes.

    Compares ``a(u0) Δ_h u0 + f(u0)`` with ``∂_t u_gamma(t0)`` on boundary
    nodes where ``u0 != 0``, and ``u_gamma(t0)`` with ``u0`` everywhere on the
    boundary. ``alpha`` is accepted for symmetry with the other reports and
    does not change the test.
    """
    u0 = problem.u0
    h = problem.h
    delta = cfl_dt(problem, u0, h)
    grid = make_grid(problem.t0, problem.T, 3, problem.R, problem.nx, problem.d)
    bidx = problem.boundary_index
    g = np.array([problem.boundary_values(problem.t0 + i * delta) for i in range(3)])
    defect = float(np.max(np.abs(g[0] - u0[bidx])))
    nz = u0[bidx] != 0
    checked = int(nz.sum())
    if checked:
        lap = laplacian_array(u0, grid)[bidx]
        lhs = np.asarray(problem.coeff.a(u0[bidx]), dtype=np.float64) * lap
        if not problem.coeff.f_is_zero:
            lhs = lhs + np.asarray(problem.coeff.f(u0[bidx]), dtype=np.float64)
        rhs = time_derivative_array(g, delta)[0]
        defect = max(defect, float(np.max(np.abs(lhs - rhs)[nz])))
    tol = 10.0 * (h**2 + delta)
    return CompatibilityReport(defect <= tol, defect, tol, checked)


def sup_error(field: ScalarField, p: BarenblattParams) -> float:
    """Max nodal distance between a trajectory and the Barenblatt oracle."""
    exact = field.grid.sample(lambda T, X: barenblatt_value(p, T, X))
    return float(np.abs(field.values - exact.values).max())


def standard_form_mass(layer: FloatArray, h: float, m: float) -> float:
    """Trapezoid integral of ``|u|^(1/m)`` over a 1D layer."""
    s = np.abs(np.asarray(layer, dtype=np.float64)) ** (1.0 / m)
    return float(h * (s.sum() - 0.5 * (s[0] + s[-1])))
