"""Closed-form Barenblatt solutions of ``u_t = m u^(1-1/m) Δu``.

In the porous-medium variable ``s = u^(1/m)`` these are the classical source
solutions of ``s_t = Δ(s^m)``; here they are written for ``u = s^m``::

    B(t, x) = t^(-md/D) (C - κ |x|² t^(-2/D))_+^(m/(m-1)),
    D = d(m-1) + 2,  κ = (m-1) / (2 m D).

``BarenblattParams.tau`` shifts time, so that ``value(p, t, x) = B(t + tau, x)``.
All evaluators are vectorised over ``t`` and ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ScalarField, SpaceTimeGrid


@dataclass(frozen=True)
class BarenblattParams:
    m: float = 2.0
    d: int = 1
    C: float = 1.0
    tau: float = 1.0

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ValueError(f"m must exceed 1, got {self.m}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")

    @property
    def denom(self) -> float:
        return self.d * (self.m - 1.0) + 2.0

    @property
    def outer(self) -> float:
        return self.m * self.d / self.denom

    @property
    def inner(self) -> float:
        return 2.0 / self.denom

    @property
    def kappa(self) -> float:
        return (self.m - 1.0) / (2.0 * self.m * self.denom)

    @property
    def power(self) -> float:
        return self.m / (self.m - 1.0)

    @property
    def mass(self) -> float:
        """Integral of ``B^(1/m)`` over the line (``d = 1``), conserved in time."""
        if self.d != 1:
            raise NotImplementedError("closed-form mass is only provided for d = 1")
        # ∫ (C - κ ξ²)_+^(1/(m-1)) dξ via the Beta function
        from scipy.special import beta

        e = 1.0 / (self.m - 1.0)
        return float(self.C ** (e + 0.5) / np.sqrt(self.kappa) * beta(0.5, e + 1.0))


def _shifted(p: BarenblattParams, t):
    tt = np.asarray(t, dtype=np.float64) + p.tau
    if np.any(tt <= 0):
        raise ValueError("Barenblatt solution requires t + tau > 0")
    return tt


def barenblatt_value(p: BarenblattParams, t, x):
    tt = _shifted(p, t)
    x = np.asarray(x, dtype=np.float64)
    w = np.maximum(p.C - p.kappa * x**2 * tt ** (-p.inner), 0.0)
    out = tt ** (-p.outer) * w**p.power
    return out if out.ndim else float(out)


def barenblatt_derivatives(p: BarenblattParams, t, x):
    """Return ``(B_t, B_x, ΔB)`` from the closed form.

    ``B_x`` is the derivative along the signed coordinate ``x`` (the radial
    derivative when ``x = r >= 0``) and ``ΔB`` the ``d``-dimensional Laplacian
    of the radial profile. Values are the interior formulas strictly inside the
    support and exactly 0 on and outside the free boundary; the jump of ``ΔB``
    across the interface is deliberately not smoothed.
    """
    tt = _shifted(p, t)
    x = np.asarray(x, dtype=np.float64)
    tt, x = np.broadcast_arrays(tt, x)
    k, g, A, b = p.kappa, p.power, p.outer, p.inner
    w = p.C - k * x**2 * tt ** (-b)
    inside = w > 0
    ws = np.where(inside, w, 1.0)
    scale = tt ** (-A)
    # w_t = κ b x² t^(-b-1),  w_x = -2κ x t^(-b)
    wt = k * b * x**2 * tt ** (-b - 1.0)
    wx = -2.0 * k * x * tt ** (-b)
    Bt = -A * tt ** (-A - 1.0) * ws**g + scale * g * ws ** (g - 1.0) * wt
    Bx = scale * g * ws ** (g - 1.0) * wx
    lap = scale * (
        g * (g - 1.0) * ws ** (g - 2.0) * wx**2 - 2.0 * p.d * k * g * ws ** (g - 1.0) * tt ** (-b)
    )
    out = tuple(np.where(inside, q, 0.0) for q in (Bt, Bx, lap))
    if out[0].ndim == 0:
        return tuple(float(q) for q in out)
    return out


def support_radius(p: BarenblattParams, t):
    tt = _shifted(p, t)
    out = np.sqrt(p.C / p.kappa) * tt ** (p.inner / 2.0)
    return out if np.ndim(out) else float(out)


def sample_barenblatt(p: BarenblattParams, grid: SpaceTimeGrid) -> ScalarField:
    if grid.d != p.d:
        raise ValueError(f"grid dimension {grid.d} does not match Barenblatt d = {p.d}")
    return grid.sample(lambda T, X: barenblatt_value(p, T, X))


def to_standard_form(u, m: float):
    """``s = u |u|^(1/m - 1)``, the porous-medium unknown behind ``u``."""
    if not m > 1:
        raise ValueError(f"m must exceed 1, got {m}")
    u = np.asarray(u, dtype=np.float64)
    out = np.sign(u) * np.abs(u) ** (1.0 / m)
    return out if out.ndim else float(out)


def from_standard_form(s, m: float):
    """Inverse of :func:`to_standard_form`: ``u = s |s|^(m-1)``."""
    if not m > 1:
        raise ValueError(f"m must exceed 1, got {m}")
    s = np.asarray(s, dtype=np.float64)
    out = s * np.abs(s) ** (m - 1.0)
    return out if out.ndim else float(out)
