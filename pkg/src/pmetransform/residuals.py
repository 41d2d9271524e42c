"""Residuals of the original and the transformed equation, and refinement studies.

Three checks, from exact to discrete:

* :func:`identity_residual_analytic` evaluates ``∂_t V(u) - ΔΦ(u) - f̄_u`` (or
  the divergence form ``∂_t v - ∇·(a(U(v))∇v) - f̄_u``) at scattered points
  from the closed-form Barenblatt derivatives. It vanishes to rounding error.
* :func:`residual_original` is the grid defect of ``u_t - a(u)Δ_h u - f(u)``.
* :func:`residual_transformed` is the grid defect of the transformed equation
  in divergence form, with face diffusivities from arithmetic means.

:func:`convergence_study` runs both grid residuals and the Hölder seminorms of
``∂_t u``, ``Δ_h u``, ``∂_t v`` and ``Δ_h Φ(u)`` over a sequence of grids.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np

from .barenblatt import BarenblattParams, barenblatt_derivatives, barenblatt_value, support_radius
from .coefficients import CoefficientFunction
from .grid import (
    FloatArray,
    RegionMask,
    ScalarField,
    SpaceTimeGrid,
    gradient_array,
    laplacian_array,
    make_grid,
    time_derivative_array,
)
from .holder import HolderReport, holder_seminorm
from .transform import ClosedFormTransform, TransformSpec, transform_from_config

BAND_CELLS = 3


@dataclass(frozen=True, eq=False)
class ResidualReport:
    field: ScalarField = dc_field(repr=False)
    sup_norm: float
    holder: HolderReport | None
    region: RegionMask = dc_field(repr=False)
    terms: dict = dc_field(default_factory=dict, repr=False)

    @property
    def grid_tag(self) -> str:
        g = self.field.grid
        return f"nt={g.nt},nx={g.nx},d={g.d}"


@dataclass(frozen=True)
class PointResidual:
    t: FloatArray
    x: FloatArray
    residual: FloatArray

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.residual).max())


# --- analytic path --------------------------------------------------------------


def identity_residual_analytic(
    p: BarenblattParams, spec: TransformSpec, t, x, form: str = "laplacian"
) -> PointResidual:
    """Exact residual of the transformed equation along a Barenblatt solution.

    ``form="laplacian"`` checks ``∂_t V(u) = ΔΦ(u) + f̄_u`` with the chain
    rule ``ΔΦ(u) = Φ'(u)Δu + Φ''(u)|∇u|²``; ``form="divergence"`` checks
    ``∂_t v = ∇·(D(v)∇v) + f̄_u`` with ``D = a∘U`` (closed-form specs only).
    """
    if spec.coeff.kind != "power_law" or spec.coeff.params.get("m") != p.m:
        raise ValueError("transform spec must be the power-law spec with the same m")
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t, x = np.broadcast_arrays(t, x)
    if np.any(np.abs(x) >= support_radius(p, t)):
        raise ValueError("all sample points must lie strictly inside the support")
    u = barenblatt_value(p, t, x)
    ut, ux, lapu = barenblatt_derivatives(p, t, x)
    g2 = ux**2
    dtV = spec.V_prime(u) * ut
    fbar = spec.fbar(u, g2)
    if form == "laplacian":
        rhs = spec.Phi_prime(u) * lapu + spec.Phi_second(u) * g2 + fbar
    elif form == "divergence":
        if not isinstance(spec, ClosedFormTransform):
            raise ValueError("divergence form needs a closed-form spec")
        v = spec.V(u)
        Vp = spec.V_prime(u)
        grad_v_sq = (Vp * ux) ** 2
        lap_v = Vp * lapu + spec.V_second(u) * g2
        rhs = spec.diffusion_prime(v) * grad_v_sq + spec.diffusion(v) * lap_v + fbar
    else:
        raise ValueError(f"unknown form {form!r}")
    return PointResidual(t, x, dtV - rhs)


def random_interior_points(p: BarenblattParams, n: int, t0: float, t1: float, margin: float = 0.05, seed: int = 0x5EED):
    """``n`` points with ``t`` uniform in ``[t0, t1]`` and ``|x|`` below ``(1 - margin)`` of the support radius."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(t0, t1, n)
    r = support_radius(p, t)
    x = rng.uniform(-1.0, 1.0, n) * (1.0 - margin) * r
    if p.d > 1:
        x = np.abs(x)
    return t, x


# --- grid path ------------------------------------------------------------------


def _maybe_holder(f: ScalarField, alpha: float | None, region: RegionMask, **kw) -> HolderReport | None:
    if alpha is None:
        return None
    return holder_seminorm(f, alpha, region, **kw)


def residual_original(
    u: ScalarField,
    coeff: CoefficientFunction,
    alpha: float | None = None,
    region: RegionMask | None = None,
    **kw,
) -> ResidualReport:
    """``∂_t u - a(u)Δ_h u - f(u)`` on the grid.

    ``sup_norm`` is taken over ``region``; with ``alpha`` given, Hölder reports
    of the residual (over ``region``) and of the terms ``∂_t u`` and
    ``a(u)Δ_h u`` (over the full grid) are attached.
    """
    grid = u.grid
    region = RegionMask.full(grid) if region is None else region
    dtu = time_derivative_array(u.values, grid.dt)
    alap = np.asarray(coeff.a(u.values), dtype=np.float64) * laplacian_array(u.values, grid)
    res = dtu - alap
    if not coeff.f_is_zero:
        res = res - np.asarray(coeff.f(u.values), dtype=np.float64)
    rf = u.with_values(res)
    full = RegionMask.full(grid)
    terms = {}
    if alpha is not None:
        terms = {
            "dt_u": holder_seminorm(u.with_values(dtu), alpha, full, **kw),
            "a_lap_u": holder_seminorm(u.with_values(alap), alpha, full, **kw),
        }
    sup = float(np.abs(res[region.mask]).max()) if region.count else 0.0
    return ResidualReport(rf, sup, _maybe_holder(rf, alpha, region, **kw) if region.count else None, region, terms)


def divergence_term(v: FloatArray, D: FloatArray, grid: SpaceTimeGrid) -> FloatArray:
    """Flux-differenced ``∇·(D ∇v)`` with arithmetic-mean face values."""
    h = grid.h
    Df = 0.5 * (D[..., 1:] + D[..., :-1])
    flux = Df * (v[..., 1:] - v[..., :-1]) / h
    out = np.empty_like(v)
    if grid.radial:
        dim = grid.d
        r = grid.x
        rf = 0.5 * (r[1:] + r[:-1])
        wflux = flux * rf ** (dim - 1)
        # divide by the shell volume so that the stencil is conservative and exact on r²
        shell = (rf[1:] ** dim - rf[:-1] ** dim) / dim
        out[..., 1:-1] = (wflux[..., 1:] - wflux[..., :-1]) / shell
        out[..., 0] = 2.0 * dim * flux[..., 0] / h
        nodal = D * gradient_array(v, grid)
        dF = gradient_array(nodal, grid)
        out[..., -1] = dF[..., -1] + (dim - 1) / r[-1] * nodal[..., -1]
    else:
        out[..., 1:-1] = (flux[..., 1:] - flux[..., :-1]) / h
        nodal = D * gradient_array(v, grid)
        dF = gradient_array(nodal, grid)
        out[..., 0] = dF[..., 0]
        out[..., -1] = dF[..., -1]
    return out


def residual_transformed(
    v: ScalarField,
    spec: TransformSpec,
    u: ScalarField | None = None,
    alpha: float | None = None,
    region: RegionMask | None = None,
    fbar_mode: str = "potential",
    **kw,
) -> ResidualReport:
    """``∂_t v - ∇·(a(U(v))∇v) - f̄_u`` on the grid.

    ``f̄_u`` is built from discrete gradients of the trajectory. With
    ``fbar_mode="potential"`` (default) the curvature term ``Φ''(u)|∇u|²`` is
    taken as ``±|∇_h G(u)|²`` with ``G' = sqrt|Φ''|``; ``"direct"`` uses
    ``Φ''(u)|∇_h u|²`` literally, which is unbounded at nodes just inside a
    free boundary where ``Φ''`` is singular.
    """
    grid = v.grid
    region = RegionMask.full(grid) if region is None else region
    vals = v.values
    uvals = spec.U(vals) if u is None else u.values
    dtv = time_derivative_array(vals, grid.dt)
    div = divergence_term(vals, np.asarray(spec.diffusion(vals), dtype=np.float64), grid)
    if fbar_mode == "potential":
        gG = gradient_array(spec.grad_potential(uvals), grid)
        fb = spec.fbar_from_potential(uvals, gG**2)
    elif fbar_mode == "direct":
        gu = gradient_array(uvals, grid)
        fb = spec.fbar(uvals, gu**2)
    else:
        raise ValueError(f"unknown fbar_mode {fbar_mode!r}")
    res = dtv - div - fb
    rf = v.with_values(res)
    terms = {}
    if alpha is not None:
        full = RegionMask.full(grid)
        terms = {
            "dt_v": holder_seminorm(v.with_values(dtv), alpha, full, **kw),
            "div": holder_seminorm(v.with_values(div), alpha, full, **kw),
            "fbar": holder_seminorm(v.with_values(fb), alpha, full, **kw),
        }
    sup = float(np.abs(res[region.mask]).max()) if region.count else 0.0
    return ResidualReport(rf, sup, _maybe_holder(rf, alpha, region, **kw) if region.count else None, region, terms)


# --- refinement study -----------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A family of fields to refine: the Barenblatt solution or ``u ≡ 0``.

    ``source="analytic"`` samples the closed form; ``"solver"`` integrates
    from the sampled initial layer with :func:`pmetransform.solver.solve`.
    """

    kind: str = "barenblatt"
    barenblatt: BarenblattParams = dc_field(default_factory=lambda: BarenblattParams(2.0, 1, 1.0, 0.0))
    transform: dict = dc_field(default_factory=lambda: {"kind": "power_law", "m": 2.0, "alpha": 0.5, "M": 2.0, "mode": "closed_form"})
    t0: float = 1.0
    t1: float = 2.0
    R: float = 6.0
    source: str = "analytic"

    def __post_init__(self) -> None:
        if self.kind not in ("barenblatt", "zero"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.source not in ("analytic", "solver"):
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def d(self) -> int:
        return self.barenblatt.d

    def spec(self) -> TransformSpec:
        return transform_from_config(self.transform)

    def max_u(self) -> float:
        if self.kind == "zero":
            return 0.0
        return float(barenblatt_value(self.barenblatt, self.t0, 0.0))

    def cfl_levels(self, nxs: Sequence[int]) -> list[tuple[int, int]]:
        """``(nt, nx)`` per level with ``dt`` at most the explicit CFL step."""
        from .solver import CFL_FACTOR, EPS_A

        spec = self.spec()
        amax = max(float(np.asarray(spec.coeff.a(np.array([self.max_u()])))[0]), EPS_A)
        levels = []
        for nx in nxs:
            h = make_grid(self.t0, self.t1, 3, self.R, nx, self.d).h
            dt = CFL_FACTOR * h**2 / (2.0 * self.d * amax)
            nt = max(3, int(np.ceil((self.t1 - self.t0) / dt)) + 1)
            nt = min(nt, 100 * nx)
            levels.append((nt, int(nx)))
        return levels

    def sample(self, nt: int, nx: int) -> ScalarField:
        grid = make_grid(self.t0, self.t1, nt, self.R, nx, self.d)
        if self.kind == "zero":
            return ScalarField(grid, np.zeros(grid.shape))
        if self.source == "analytic":
            return grid.sample(lambda T, X: barenblatt_value(self.barenblatt, T, X))
        from .solver import barenblatt_problem, solve

        prob = barenblatt_problem(self.barenblatt, self.spec().coeff, self.t0, self.t1, self.R, nx)
        return solve(prob, nt)

    def interface_distance(self, grid: SpaceTimeGrid) -> FloatArray | None:
        """``|x| - radius(t)`` on the grid, or ``None`` without a free boundary."""
        if self.kind == "zero":
            return None
        T, X = grid.mesh()
        return np.abs(X) - support_radius(self.barenblatt, T)


CSV_COLUMNS = [
    "level", "nt", "nx", "sup_res_orig", "sup_res_trans", "semi_dtu", "semi_lap_u",
    "semi_dtv", "semi_lap_Phi", "runtime_s", "max_lap_u_fb", "max_lap_Phi_fb",
]


@dataclass(frozen=True)
class LevelResult:
    level: int
    nt: int
    nx: int
    sup_res_orig: float
    sup_res_trans: float
    semi_dtu: float
    semi_lap_u: float
    semi_dtv: float
    semi_lap_Phi: float
    runtime_s: float
    max_lap_u_fb: float
    max_lap_Phi_fb: float


def _run_level(args) -> LevelResult:
    scenario, level, nt, nx, seed = args
    start = time.perf_counter()
    spec = scenario.spec()
    alpha = spec.alpha
    u = scenario.sample(nt, nx)
    grid = u.grid
    kw = {"seed": seed}
    dist = scenario.interface_distance(grid)
    if dist is None:
        interior = RegionMask.full(grid)
        band = RegionMask(grid, np.zeros(grid.shape, dtype=bool))
    else:
        interior = RegionMask(grid, dist < -BAND_CELLS * grid.h)
        band = RegionMask(grid, np.abs(dist) <= BAND_CELLS * grid.h)
    orig = residual_original(u, spec.coeff, region=interior)
    v = u.map(spec.V)
    trans = residual_transformed(v, spec, u=u)
    dtu = u.with_values(time_derivative_array(u.values, grid.dt))
    lapu = u.with_values(laplacian_array(u.values, grid))
    dtv = v.with_values(time_derivative_array(v.values, grid.dt))
    lapP = u.with_values(laplacian_array(spec.Phi(u.values), grid))
    semis = [holder_seminorm(f, alpha, **kw).seminorm for f in (dtu, lapu, dtv, lapP)]
    fb_u = lapu.abs_max(band) if band.count else 0.0
    fb_P = lapP.abs_max(band) if band.count else 0.0
    return LevelResult(
        level, nt, nx, orig.sup_norm, trans.sup_norm, *semis,
        time.perf_counter() - start, fb_u, fb_P,
    )


def convergence_study(
    scenario: Scenario, refinements: Sequence[tuple[int, int]], jobs: int = 1, seed: int = 0x5EED
) -> list[LevelResult]:
    """Residuals and seminorms for each ``(nt, nx)`` level, coarse to fine."""
    refinements = [(int(nt), int(nx)) for nt, nx in refinements]
    if len(refinements) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    for (nt0, nx0), (nt1, nx1) in zip(refinements, refinements[1:]):
        if not (nx1 > nx0 and nt1 >= nt0):
            raise ValueError(f"levels must strictly refine: {(nt0, nx0)} -> {(nt1, nx1)}")
    tasks = [(scenario, i, nt, nx, seed) for i, (nt, nx) in enumerate(refinements)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_level, tasks))
    return [_run_level(t) for t in tasks]


def write_study_csv(rows: Sequence[LevelResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([d[c] if isinstance(d[c], int) else f"{d[c]:.17g}" for c in CSV_COLUMNS])
