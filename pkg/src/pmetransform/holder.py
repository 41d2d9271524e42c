"""Discrete parabolic Hölder norms and the level-set profile ψ.

The seminorm of order ``β`` uses the parabolic metric
``dist((t, x), (s, y)) = max(|t - s|^(1/2), |x - y|)``::

    [f]_β = sup_{p != q} |f(p) - f(q)| / dist(p, q)^β

taken over pairs of grid nodes. Regions of at most ``max_nodes`` nodes use
every pair. Larger regions combine two pair families, both restricted to
the region:

* all pairs among a fixed-seed random subsample of ``max_nodes`` nodes
  (long-range pairs), and
* every pair at a short grid offset (``|Δj| <= window`` cells in space and
  ``Δi`` in ``{0, 1, 2, 4, ...}`` layers in time), which catches the
  cell-scale quotients a random subsample misses on fine grids.

Either way the estimate is a supremum over actual node pairs, so it never
exceeds the exhaustive discrete seminorm; reports flag this with
``exact=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coefficients import CoefficientFunction
from .grid import (
    FloatArray,
    RegionMask,
    ScalarField,
    gradient_array,
    laplacian_array,
    superlevel_mask,
    time_derivative_array,
)

DEFAULT_SEED = 0x5EED
MAX_NODES = 5000
LOCAL_WINDOW = 4
SAMPLES_1D = 512
_CHUNK = 512


@dataclass(frozen=True, eq=False)
class HolderReport:
    exponent: float
    region: RegionMask = field(repr=False)
    sup_norm: float
    seminorm: float
    pairs_sampled: int
    exact: bool

    @property
    def norm(self) -> float:
        return self.sup_norm + self.seminorm

    def to_text(self) -> str:
        rows = {
            "exponent": repr(self.exponent),
            "region_nodes": str(self.region.count),
            "sup_norm": f"{self.sup_norm:.17g}",
            "seminorm": f"{self.seminorm:.17g}",
            "norm": f"{self.norm:.17g}",
            "pairs_sampled": str(self.pairs_sampled),
            "exact": str(self.exact).lower(),
        }
        return "".join(f"{k} = {v}\n" for k, v in rows.items())


def parabolic_distance(p, q):
    """``max(|t - s|^(1/2), |x - y|)`` for points ``p = (t, x)``, ``q = (s, y)``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    out = np.maximum(np.sqrt(np.abs(p[..., 0] - q[..., 0])), np.abs(p[..., 1] - q[..., 1]))
    return out if out.ndim else float(out)


def _all_pairs_sup(vals: FloatArray, t: FloatArray, x: FloatArray, beta: float) -> float:
    best = 0.0
    n = vals.size
    for i0 in range(0, n, _CHUNK):
        sl = slice(i0, min(i0 + _CHUNK, n))
        # upper triangle only: pair (i, j) with j > i
        j0 = i0
        dv = np.abs(vals[sl, None] - vals[None, j0:])
        dist = np.maximum(np.sqrt(np.abs(t[sl, None] - t[None, j0:])), np.abs(x[sl, None] - x[None, j0:]))
        ok = dist > 0
        if np.any(ok):
            best = max(best, float((dv[ok] / dist[ok] ** beta).max()))
    return best


def _time_offsets(nt: int) -> list[int]:
    offs = [0]
    step = 1
    while step < nt:
        offs.append(step)
        step *= 2
    return offs


def _local_pairs_sup(values: FloatArray, mask, t: FloatArray, x: FloatArray, beta: float, window: int) -> tuple[float, int]:
    """Pairs at small index offsets; distances from coordinates as in :func:`_all_pairs_sup`."""
    nt, nx = values.shape
    best = 0.0
    npairs = 0
    for di in _time_offsets(nt):
        for dj in range(-window, window + 1):
            if di == 0 and dj <= 0:
                continue
            if abs(dj) >= nx:
                continue
            ca = slice(max(dj, 0), nx + min(dj, 0))
            cb = slice(max(-dj, 0), nx - max(dj, 0))
            a_sl = (slice(di, nt), ca)
            b_sl = (slice(0, nt - di), cb)
            both = mask[a_sl] & mask[b_sl]
            cnt = int(both.sum())
            if not cnt:
                continue
            npairs += cnt
            dist = np.maximum(np.sqrt(np.abs(t[di:] - t[: nt - di]))[:, None], np.abs(x[ca] - x[cb])[None, :])
            diff = np.abs(values[a_sl] - values[b_sl])
            best = max(best, float((diff[both] / dist[both] ** beta).max()))
    return best, npairs


def holder_seminorm(
    f: ScalarField,
    beta: float,
    region: RegionMask | None = None,
    *,
    max_nodes: int = MAX_NODES,
    seed: int = DEFAULT_SEED,
    window: int = LOCAL_WINDOW,
    exhaustive: bool = False,
) -> HolderReport:
    """Sup-norm and parabolic ``β``-seminorm of ``f`` over ``region``."""
    if not 0 < beta <= 1:
        raise ValueError(f"exponent must lie in (0, 1], got {beta}")
    grid = f.grid
    region = RegionMask.full(grid) if region is None else region
    if region.grid != grid:
        raise ValueError("region and field live on different grids")
    idx = np.flatnonzero(region.mask)
    if idx.size == 0:
        raise ValueError("empty region")
    vals = f.values.ravel()[idx]
    sup = float(np.abs(vals).max())
    T, X = grid.mesh()
    t, x = T.ravel()[idx], X.ravel()[idx]
    n = idx.size
    if n <= max_nodes or exhaustive:
        semi = _all_pairs_sup(vals, t, x, beta)
        return HolderReport(beta, region, sup, semi, n * (n - 1) // 2, True)
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(n, size=max_nodes, replace=False))
    semi = _all_pairs_sup(vals[pick], t[pick], x[pick], beta)
    pairs = max_nodes * (max_nodes - 1) // 2
    if window > 0:
        loc, nloc = _local_pairs_sup(f.values, region.mask, grid.t, grid.x, beta, window)
        semi = max(semi, loc)
        pairs += nloc
    return HolderReport(beta, region, sup, semi, pairs, False)


def holder_norm_1d(g: Callable, lo: float, hi: float, beta: float, points: FloatArray | None = None) -> float:
    """``sup|g| + [g]_β`` on ``[lo, hi]`` from samples (all pairs)."""
    if points is None:
        points = np.linspace(lo, hi, SAMPLES_1D)
    pts = np.asarray(points, dtype=np.float64)
    pts = pts[(pts >= lo) & (pts <= hi)]
    vals = np.asarray(g(pts), dtype=np.float64)
    if vals.size == 0:
        return 0.0
    zeros = np.zeros_like(pts)
    return float(np.abs(vals).max()) + _all_pairs_sup(vals, zeros, pts, beta)


# --- C^{1+α/2, 2+α} -------------------------------------------------------------


def _require_thick(region: RegionMask) -> None:
    rows = np.flatnonzero(region.mask.any(axis=1))
    cols = np.flatnonzero(region.mask.any(axis=0))
    if rows.size < 3 or cols.size < 3:
        raise ValueError("region too thin for the derivative stencils")


def parabolic_norm_2plus(
    f: ScalarField, alpha: float, region: RegionMask | None = None, *, terms: bool = False, **kw
):
    """Discrete ``C^{(1+α/2, 2+α)}`` norm over ``region``.

    Sum of the sup norms of ``f``, ``∇f``, ``Δ_h f`` and ``∂_t f`` plus the
    ``α``-seminorms of ``∂_t f`` and ``Δ_h f``. Stencils are taken on the full
    grid and then restricted. Mixed intermediate seminorms (``∇f`` in time at
    order ``(1+α)/2``) are left out.
    """
    grid = f.grid
    region = RegionMask.full(grid) if region is None else region
    _require_thick(region)
    m = region.mask
    dtf = time_derivative_array(f.values, grid.dt)
    lap = laplacian_array(f.values, grid)
    grad = gradient_array(f.values, grid)
    parts = {
        "sup_f": float(np.abs(f.values[m]).max()),
        "sup_grad": float(np.abs(grad[m]).max()),
        "sup_lap": float(np.abs(lap[m]).max()),
        "sup_dt": float(np.abs(dtf[m]).max()),
        "semi_dt": holder_seminorm(f.with_values(dtf), alpha, region, **kw).seminorm,
        "semi_lap": holder_seminorm(f.with_values(lap), alpha, region, **kw).seminorm,
    }
    total = float(sum(parts.values()))
    return (total, parts) if terms else total


# --- level-set profile ψ --------------------------------------------------------


@dataclass(frozen=True)
class PsiProfile:
    """ψ(±k) on descending thresholds, with the terms it is built from.

    ``components`` maps a name to an array aligned with ``thresholds``:
    ``norm_a``, ``norm_f``, ``holder_u``, ``norm_u0``, ``norm_ugamma`` for the
    positive side (and ``*_minus`` for the mirrored side), plus the diagnostic
    ``norm2plus_u`` (``C^{(1+α/2,2+α)}`` norm of ``u`` on ``{u >= k}``) and the
    two readings of ``φ^{-1}(k)``: ``phi_reciprocal = 1/φ(k)`` and
    ``phi_inverse`` (inverse function).
    """

    thresholds: FloatArray
    psi_plus: FloatArray
    psi_minus: FloatArray
    components: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        k = np.asarray(self.thresholds)
        if np.any(np.diff(k) >= 0):
            raise ValueError("thresholds must be strictly descending")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("k,psi_plus,psi_minus\n")
            for row in zip(self.thresholds, self.psi_plus, self.psi_minus):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def components_to_csv(self, path) -> None:
        names = list(self.components)
        with open(path, "w") as fh:
            fh.write(",".join(["k", *names]) + "\n")
            for i, k in enumerate(self.thresholds):
                fh.write(",".join(f"{v:.17g}" for v in [k, *(self.components[n][i] for n in names)]) + "\n")


def _inverse_monotone(g: Callable, y: float, hi: float, iters: int = 200) -> float:
    """Smallest ``z`` in ``[0, hi]`` with ``g(z) >= y`` for nondecreasing ``g``."""
    if g(np.array([hi]))[0] < y:
        return float("nan")
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(np.array([mid]))[0] < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _trace_norm_time(g: FloatArray, dt: float, alpha: float) -> float:
    """``C^{1+α/2}`` norm in time of a boundary trace (a point of Γ in 1D)."""
    if g.size < 3:
        return float(np.abs(g).max()) if g.size else 0.0
    dg = time_derivative_array(g, dt)
    t = np.arange(g.size) * dt
    semi = _all_pairs_sup(dg, t, np.zeros_like(t), alpha)
    return float(np.abs(g).max() + np.abs(dg).max() + semi)


def _c2alpha_norm_1d(g: FloatArray, x: FloatArray, keep, h: float, alpha: float) -> float:
    if not np.any(keep):
        return 0.0
    d1 = np.gradient(g, h, edge_order=2)
    d2 = np.gradient(d1, h, edge_order=2)
    zeros = np.zeros(int(keep.sum()))
    semi = _all_pairs_sup(d2[keep], zeros, x[keep], alpha)
    return float(np.abs(g[keep]).max() + np.abs(d1[keep]).max() + np.abs(d2[keep]).max() + semi)


def psi_profile(
    u: ScalarField,
    coeff: CoefficientFunction,
    thresholds: Sequence[float],
    *,
    alpha_u: float,
    alpha: float,
    phi: Callable | None = None,
    u0: FloatArray | None = None,
    u_gamma: FloatArray | None = None,
    **kw,
) -> PsiProfile:
    """Level-set regularity profile of ``u``.

    ``u0`` is the initial layer (length ``nx``) and ``u_gamma`` the boundary
    trace, shape ``(nt, n_boundary_points)``; both are optional. ``phi``
    defaults to ``a²`` and only feeds the ``phi_*`` diagnostic columns.

    Estimates on nested level sets are combined with a running maximum: a pair
    of nodes sampled for ``{u >= k'}`` is also a pair of ``{u >= k}`` when
    ``k < k'``, so the larger set inherits it.
    """
    ks = np.sort(np.asarray(thresholds, dtype=np.float64))[::-1]
    if ks.size == 0 or np.any(ks <= 0):
        raise ValueError("thresholds must be positive")
    umax = float(np.abs(u.values).max())
    if ks[0] > umax:
        raise ValueError(f"threshold {ks[0]} exceeds max|u| = {umax}")
    grid = u.grid
    a, f = coeff.a, coeff.f
    phi = phi if phi is not None else (lambda z: np.asarray(a(z), dtype=np.float64) ** 2)
    pts = np.union1d(np.linspace(ks[-1], umax, SAMPLES_1D), ks)
    names = [
        "norm_a", "norm_f", "holder_u", "norm_u0", "norm_ugamma",
        "norm_a_minus", "norm_f_minus", "holder_u_minus", "norm_u0_minus", "norm_ugamma_minus",
        "norm2plus_u", "phi_reciprocal", "phi_inverse",
    ]
    comp = {n: np.zeros(ks.size) for n in names}
    x = grid.x
    for i, k in enumerate(ks):
        for side, sgn in (("", 1.0), ("_minus", -1.0)):
            comp["norm_a" + side][i] = holder_norm_1d(lambda z: a(sgn * z), k, umax, coeff.alpha_a, pts)
            comp["norm_f" + side][i] = holder_norm_1d(lambda z: f(sgn * z), k, umax, coeff.alpha_f, pts)
            region = superlevel_mask(u, k, "ge" if sgn > 0 else "le")
            if region.count:
                comp["holder_u" + side][i] = holder_seminorm(u, alpha_u, region, **kw).norm
            if u0 is not None:
                keep = sgn * np.asarray(u0) >= k
                comp["norm_u0" + side][i] = _c2alpha_norm_1d(np.asarray(u0, dtype=np.float64), x, keep, grid.h, alpha)
            if u_gamma is not None:
                ug = np.asarray(u_gamma, dtype=np.float64).reshape(grid.nt, -1)
                best = 0.0
                for col in ug.T:
                    keep = sgn * col >= k
                    if np.any(keep):
                        best = max(best, _trace_norm_time(np.where(keep, col, 0.0), grid.dt, alpha))
                comp["norm_ugamma" + side][i] = best
        region = superlevel_mask(u, k, "ge")
        try:
            comp["norm2plus_u"][i] = parabolic_norm_2plus(u, alpha, region, **kw)
        except ValueError:
            comp["norm2plus_u"][i] = np.nan
        pk = float(np.asarray(phi(np.array([k])))[0])
        comp["phi_reciprocal"][i] = 1.0 / pk if pk > 0 else np.inf
        comp["phi_inverse"][i] = _inverse_monotone(lambda z: np.asarray(phi(z), dtype=np.float64), k, umax)
    for n in names:
        if n.startswith("phi_"):
            continue
        col = comp[n]
        finite = np.where(np.isnan(col), -np.inf, col)
        comp[n] = np.where(np.isnan(col), np.nan, np.maximum.accumulate(finite))
    plus = np.max([comp[n] for n in ("norm_a", "norm_f", "holder_u", "norm_u0", "norm_ugamma")], axis=0)
    minus = np.max(
        [comp[n] for n in ("norm_a_minus", "norm_f_minus", "holder_u_minus", "norm_u0_minus", "norm_ugamma_minus")],
        axis=0,
    )
    return PsiProfile(ks, plus, minus, comp)
