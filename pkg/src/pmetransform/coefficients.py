"""Diffusion coefficient ``a`` and reaction ``f`` of ``u_t = a(u) Δu + f(u)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

ScalarFunc = Callable[[np.ndarray], np.ndarray]


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    """Vectorised coefficient pair with the Hölder exponents it is assumed to have.

    ``enthalpy`` is ``β(u) = ∫_0^u dw / a(w)`` and ``enthalpy_inv`` its inverse.
    When both are present the solver can march the equation in the conservative
    form ``∂_t β(u) = Δu``, which lets the free boundary move.
    """

    a: ScalarFunc
    f: ScalarFunc = _zero
    alpha_a: float = 0.5
    alpha_f: float = 0.5
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    enthalpy: ScalarFunc | None = None
    enthalpy_inv: ScalarFunc | None = None
    f_is_zero: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha_a", "alpha_f"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")

    def validate(self, M: float, n: int = 201) -> None:
        """Sampled check of the structural assumptions on ``a`` over ``[-M, M]``.

        Requires ``a(0) = 0``, ``a > 0`` away from 0, ``a`` nondecreasing on
        ``[0, M]`` and nonincreasing on ``[-M, 0]``.
        """
        k = np.linspace(-M, M, n if n % 2 else n + 1)
        vals = np.asarray(self.a(k), dtype=np.float64)
        mid = k.size // 2
        if abs(float(self.a(np.array([0.0]))[0])) > 0:
            raise ValueError("a(0) must vanish")
        if np.any(vals[k != 0] <= 0):
            raise ValueError("a must be positive away from 0")
        if np.any(np.diff(vals[mid:]) < 0):
            raise ValueError("a must be nondecreasing on [0, M]")
        if np.any(np.diff(vals[: mid + 1]) > 0):
            raise ValueError("a must be nonincreasing on [-M, 0]")

    def to_config(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom coefficients have no config representation")
        return {"kind": self.kind, **self.params}


def power_law(m: float) -> CoefficientFunction:
    """``a(u) = m |u|^(1 - 1/m)`` with ``f ≡ 0``, the porous medium case."""
    if not m > 1:
        raise ValueError(f"m must exceed 1, got {m}")
    p = 1.0 - 1.0 / m

    def a(u):
        return m * np.abs(u) ** p

    def beta(u):
        u = np.asarray(u, dtype=np.float64)
        return np.sign(u) * np.abs(u) ** (1.0 / m)

    def beta_inv(s):
        s = np.asarray(s, dtype=np.float64)
        return np.sign(s) * np.abs(s) ** m

    return CoefficientFunction(
        a=a,
        alpha_a=p,
        alpha_f=p,
        kind="power_law",
        params={"m": float(m)},
        enthalpy=beta,
        enthalpy_inv=beta_inv,
        f_is_zero=True,
    )


def constant(c: float = 1.0) -> CoefficientFunction:
    """Non-degenerate ``a ≡ c``, ``f ≡ 0`` (the heat equation), for solver checks."""
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")

    def a(u):
        return np.full_like(np.asarray(u, dtype=np.float64), c)

    def beta(u):
        return np.asarray(u, dtype=np.float64) / c

    def beta_inv(s):
        return np.asarray(s, dtype=np.float64) * c

    return CoefficientFunction(
        a=a,
        alpha_a=0.5,
        alpha_f=0.5,
        kind="constant",
        params={"c": float(c)},
        enthalpy=beta,
        enthalpy_inv=beta_inv,
        f_is_zero=True,
    )


def custom(a: ScalarFunc, f: ScalarFunc | None = None, alpha_a: float = 0.5, alpha_f: float = 0.5) -> CoefficientFunction:
    return CoefficientFunction(
        a=a,
        f=f if f is not None else _zero,
        alpha_a=alpha_a,
        alpha_f=alpha_f,
        f_is_zero=f is None,
    )


def coefficient_from_config(cfg: dict) -> CoefficientFunction:
    kind = cfg.get("kind", "power_law")
    if kind == "power_law":
        return power_law(float(cfg["m"]))
    if kind == "constant":
        return constant(float(cfg.get("c", 1.0)))
    raise ValueError(f"unknown coefficient kind {kind!r}")
