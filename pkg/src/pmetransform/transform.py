"""The change of unknown ``v = V(u)`` and the functions it is built from.

Given a modulus ``φ`` with ``φ(0) = 0`` and ``φ <= a²``, the construction is::

    Φ''(k) = (∫_0^k φ(x/2) dx)²
    Φ'(k)  = ∫_0^k Φ''
    Φ(k)   = ∫_0^k Φ'
    V(k)   = ∫_0^k Φ'/a,          U = V^{-1}
    f̄_u    = -Φ''(u)|∇u|² + (Φ' f / a)(u)

so that ``∂_t V(u) = ΔΦ(u) + f̄_u = ∇·(a(u) ∇V(u)) + f̄_u`` whenever
``u_t = a(u)Δu + f(u)``.

Two backends share one interface:

* :class:`ClosedFormTransform` -- the power-law case ``a(u) = m|u|^(1-1/m)``,
  ``Φ(k) = m(1+α)/(2+α) k^((1-1/m)(2+α))``, ``V(k) = k^((1-1/m)(1+α))``.
* :class:`QuadratureTransform` -- any admissible ``(a, f, φ)``; the nested
  integrals are tabulated once by cumulative Simpson and evaluated by cubic
  Hermite interpolation using the exact derivative of each level.

Both are extended to negative arguments by odd reflection (``Φ``, ``V``,
``U`` odd; ``Φ'``, ``V'`` even), which keeps ``V`` strictly increasing on
``[-M, M]``. At the degenerate point the conventions ``V'(0) = 0`` and
``(Φ' f / a)(0) = 0`` are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from .coefficients import CoefficientFunction, coefficient_from_config, power_law

U_RTOL = 1e-12
U_MAXITER = 200


def _as_array(k):
    return np.asarray(k, dtype=np.float64)


def _out(x, like):
    return x if np.ndim(like) else float(x)


def _spow(k, e):
    """``sign(k) |k|^e`` with the value 0 at ``k = 0``."""
    ak = np.abs(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ak > 0, np.sign(k) * ak**e, 0.0)


def _apow(k, e):
    """``|k|^e`` with the value 0 at ``k = 0``."""
    ak = np.abs(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ak > 0, ak**e, 0.0)


def cap_phi(phi_raw: Callable, a: Callable) -> Callable:
    """Return ``k -> min(phi_raw(k), a(k)²)``."""

    def phi(k):
        k = _as_array(k)
        return np.minimum(np.asarray(phi_raw(k), dtype=np.float64), np.asarray(a(k), dtype=np.float64) ** 2)

    return phi


class TransformSpec:
    """Common interface of the two backends."""

    coeff: CoefficientFunction
    M: float
    alpha: float
    alpha_u: float | None

    def _check(self, k) -> np.ndarray:
        k = _as_array(k)
        if np.any(np.abs(k) > self.M * (1.0 + 1e-12)):
            raise ValueError(f"argument outside [-M, M] with M = {self.M}")
        return k

    def _check_v(self, v) -> np.ndarray:
        v = _as_array(v)
        vmax = float(self.V(self.M))
        vmin = float(self.V(-self.M))
        if np.any(v > vmax * (1.0 + 1e-12)) or np.any(v < vmin * (1.0 + 1e-12)):
            raise ValueError(f"v outside the range [{vmin}, {vmax}] of V")
        return v

    # Subclasses provide Phi, Phi_prime, Phi_second, V, V_prime, U and
    # grad_potential (G with G' = sqrt|Φ''|).

    def fbar(self, u, grad_u_sq):
        """``-Φ''(u)|∇u|² + (Φ' f / a)(u)``."""
        u = self._check(u)
        g2 = _as_array(grad_u_sq)
        if np.any(g2 < 0):
            raise ValueError("grad_u_sq must be nonnegative")
        u, g2 = np.broadcast_arrays(u, g2)
        out = -self.Phi_second(u) * g2 + self._reaction(u)
        return _out(np.where(u == 0, 0.0, out), u)

    def fbar_from_potential(self, u, grad_G_sq):
        """Same as :meth:`fbar` with ``Φ''(u)|∇u|²`` supplied as ``±|∇G(u)|²``.

        ``G`` is :meth:`grad_potential`; since ``G'(u)² = |Φ''(u)|`` the two are
        equal in the continuum, but ``∇_h G(u)`` stays well scaled at nodes
        where ``u`` is small and its neighbours are not.
        """
        u = self._check(u)
        u, g2 = np.broadcast_arrays(u, _as_array(grad_G_sq))
        sgn = np.sign(self.Phi_second(u))
        out = -sgn * g2 + self._reaction(u)
        return _out(np.where(u == 0, 0.0, out), u)

    def _reaction(self, u):
        if self.coeff.f_is_zero:
            return np.zeros_like(u)
        a = np.asarray(self.coeff.a(u), dtype=np.float64)
        fu = np.asarray(self.coeff.f(u), dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a > 0, self.Phi_prime(u) * fu / np.where(a > 0, a, 1.0), 0.0)

    def diffusion(self, v):
        """``a(U(v))``, the diffusivity of the transformed equation."""
        v = self._check_v(v)
        return _out(np.asarray(self.coeff.a(self.U(v)), dtype=np.float64), v)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ClosedFormTransform(TransformSpec):
    """Power-law transform; every formula constant is an explicit field.

    The constants are derived from ``(m, alpha)`` when left as ``None``; they
    are stored separately so that a single one can be perturbed (mutation
    tests) without touching the others.
    """

    m: float
    alpha: float
    M: float
    alpha_u: float | None = None
    phi_coef: float | None = None
    phi_exp: float | None = None
    v_coef: float | None = None
    v_exp: float | None = None
    fbar_coef: float | None = None
    fbar_exp: float | None = None
    diff_coef: float | None = None
    diff_exp: float | None = None
    coeff: CoefficientFunction = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ValueError(f"m must exceed 1, got {self.m}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        m, al = self.m, self.alpha
        p = 1.0 - 1.0 / m
        q = p * (2.0 + al)
        defaults = {
            "phi_coef": m * (1.0 + al) / (2.0 + al),
            "phi_exp": q,
            "v_coef": 1.0,
            "v_exp": p * (1.0 + al),
            "fbar_coef": (1.0 + al) * (m - 1.0) * (q - 1.0),
            "fbar_exp": q - 2.0,
            "diff_coef": m,
            "diff_exp": 1.0 / (1.0 + al),
        }
        for name, val in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, val)
        object.__setattr__(self, "coeff", power_law(m))

    def Phi(self, k):
        k = self._check(k)
        return _out(self.phi_coef * _spow(k, self.phi_exp), k)

    def Phi_prime(self, k):
        k = self._check(k)
        return _out(self.phi_coef * self.phi_exp * _apow(k, self.phi_exp - 1.0), k)

    def Phi_second(self, k):
        k = self._check(k)
        c = self.phi_coef * self.phi_exp * (self.phi_exp - 1.0)
        return _out(c * _spow(k, self.phi_exp - 2.0), k)

    def V(self, k):
        k = self._check(k)
        return _out(self.v_coef * _spow(k, self.v_exp), k)

    def V_prime(self, k):
        k = self._check(k)
        return _out(self.v_coef * self.v_exp * _apow(k, self.v_exp - 1.0), k)

    def V_second(self, k):
        k = self._check(k)
        c = self.v_coef * self.v_exp * (self.v_exp - 1.0)
        return _out(c * _spow(k, self.v_exp - 2.0), k)

    def U(self, v):
        v = self._check_v(v)
        return _out(_spow(v / self.v_coef, 1.0 / self.v_exp), v)

    def fbar(self, u, grad_u_sq):
        u = self._check(u)
        g2 = _as_array(grad_u_sq)
        if np.any(g2 < 0):
            raise ValueError("grad_u_sq must be nonnegative")
        u, g2 = np.broadcast_arrays(u, g2)
        out = -self.fbar_coef * _spow(u, self.fbar_exp) * g2
        return _out(np.where(u == 0, 0.0, out), u)

    def fbar_from_potential(self, u, grad_G_sq):
        u = self._check(u)
        u, g2 = np.broadcast_arrays(u, _as_array(grad_G_sq))
        out = -np.sign(self.fbar_coef) * np.sign(u) * g2
        return _out(np.where(u == 0, 0.0, out), u)

    def grad_potential(self, k):
        """``G(k) = sign(k) ∫_0^|k| sqrt|Φ''|``."""
        k = self._check(k)
        e = self.fbar_exp / 2.0 + 1.0
        return _out(math.sqrt(abs(self.fbar_coef)) / e * _spow(k, e), k)

    def diffusion(self, v):
        v = self._check_v(v)
        return _out(self.diff_coef * _apow(v, self.diff_exp), v)

    def diffusion_prime(self, v):
        v = self._check_v(v)
        return _out(self.diff_coef * self.diff_exp * _spow(v, self.diff_exp - 1.0), v)

    def to_config(self) -> dict:
        cfg = {"kind": "power_law", "m": self.m, "alpha": self.alpha, "M": self.M, "mode": "closed_form"}
        if self.alpha_u is not None:
            cfg["alpha_u"] = self.alpha_u
        return cfg


def make_powerlaw_spec(m: float, alpha: float, M: float, alpha_u: float | None = None) -> ClosedFormTransform:
    return ClosedFormTransform(m=float(m), alpha=float(alpha), M=float(M), alpha_u=alpha_u)


# --- quadrature backend ---------------------------------------------------------

PHI_PRESETS = ("a2", "linear")


def resolve_phi(desc, coeff: CoefficientFunction) -> tuple[Callable, object]:
    """Turn a modulus descriptor into a callable and its config representation.

    Accepted descriptors: ``None`` or ``"a2"`` (``φ = a²``), ``"linear"``
    (``φ(k) = |k|``), a mapping ``{"k": [...], "values": [...]}`` tabulated on
    ``k >= 0`` and mirrored evenly, or any vectorised callable.
    """
    if desc is None or desc == "a2":
        return (lambda k: np.asarray(coeff.a(k), dtype=np.float64) ** 2), "a2"
    if desc == "linear":
        return (lambda k: np.abs(_as_array(k))), "linear"
    if isinstance(desc, dict):
        kk = np.asarray(desc["k"], dtype=np.float64)
        vv = np.asarray(desc["values"], dtype=np.float64)
        if kk[0] != 0 or np.any(np.diff(kk) <= 0) or np.any(vv < 0):
            raise ValueError("tabulated phi needs increasing k from 0 and nonnegative values")
        return (lambda k: np.interp(np.abs(_as_array(k)), kk, vv)), {"k": kk.tolist(), "values": vv.tolist()}
    if callable(desc):
        return desc, None
    raise ValueError(f"unknown phi descriptor {desc!r}")


def _cumulative(f: np.ndarray, dy: float) -> np.ndarray:
    """Cumulative Simpson integral of a nonnegative integrand, kept monotone.

    Simpson's rule can return a negative increment on the first interval of a
    steep integrand such as ``k^4.5``; those increments fall back to the
    trapezoid rule, which is positive whenever the integrand is.
    """
    out = cumulative_simpson(f, dx=dy, initial=0.0)
    inc = np.diff(out)
    bad = inc < 0
    if np.any(bad):
        inc[bad] = 0.5 * dy * (f[:-1] + f[1:])[bad]
        out = np.concatenate([[0.0], np.cumsum(inc)])
    return out


def _monotone_hermite(y: np.ndarray, vals: np.ndarray, ders: np.ndarray) -> CubicHermiteSpline:
    """Hermite interpolant of nondecreasing data with Fritsch-Carlson limited slopes.

    Intervals already satisfying ``α² + β² <= 9`` keep the exact derivatives;
    in practice only the first few cells next to ``k = 0`` are touched.
    """
    d = np.array(ders, dtype=np.float64)
    delta = np.diff(vals) / np.diff(y)
    for i in np.flatnonzero(delta <= 0):
        d[i] = d[i + 1] = 0.0
    pos = delta > 0
    alpha = np.where(pos, d[:-1] / np.where(pos, delta, 1.0), 0.0)
    beta = np.where(pos, d[1:] / np.where(pos, delta, 1.0), 0.0)
    rad = alpha**2 + beta**2
    for i in np.flatnonzero(pos & (rad > 9.0)):
        tau = 3.0 / math.sqrt(rad[i])
        d[i] = min(d[i], tau * alpha[i] * delta[i])
        d[i + 1] = min(d[i + 1], tau * beta[i] * delta[i])
    return CubicHermiteSpline(y, vals, d)


class _SideTables:
    """Nested integrals on ``[0, M]`` for one sign of the argument."""

    def __init__(self, phi: Callable, a: Callable, M: float, n: int, sign: float) -> None:
        y = np.linspace(0.0, M, n + 1)
        dy = y[1] - y[0]
        phi_half = np.asarray(phi(sign * y / 2.0), dtype=np.float64)
        if np.any(phi_half < 0):
            raise ValueError("phi must be nonnegative")
        I1 = _cumulative(phi_half, dy)
        d2 = I1**2
        d1 = _cumulative(d2, dy)
        P = _cumulative(d1, dy)
        av = np.asarray(a(sign * y), dtype=np.float64)
        vp = np.divide(d1, av, out=np.zeros_like(d1), where=av > 0)
        V = _cumulative(vp, dy)
        absI1 = np.abs(I1)
        G = _cumulative(absI1, dy)
        self.a = a
        self.sign = sign
        self.I1 = _monotone_hermite(y, I1, phi_half)
        self.d1 = _monotone_hermite(y, d1, d2)
        self.P = _monotone_hermite(y, P, d1)
        self.V = _monotone_hermite(y, V, vp)
        self.G = _monotone_hermite(y, G, absI1)

    def vprime(self, y):
        av = np.asarray(self.a(self.sign * y), dtype=np.float64)
        d1 = self.d1(y)
        return np.divide(d1, av, out=np.zeros_like(d1), where=av > 0)


class QuadratureTransform(TransformSpec):
    """General transform built from ``(a, f, φ)`` by nested quadrature."""

    def __init__(
        self,
        coeff: CoefficientFunction,
        M: float,
        phi=None,
        nodes_per_unit: int = 1024,
        alpha: float | None = None,
        alpha_u: float | None = None,
    ) -> None:
        if not M > 0:
            raise ValueError(f"M must be positive, got {M}")
        if nodes_per_unit < 2:
            raise ValueError("nodes_per_unit must be >= 2")
        self.coeff = coeff
        self.M = float(M)
        self.alpha_u = alpha_u
        if alpha is None:
            alpha = min(coeff.alpha_a, coeff.alpha_f) * alpha_u if alpha_u is not None else 0.5
        self.alpha = float(alpha)
        self.nodes_per_unit = int(nodes_per_unit)
        phi_raw, self._phi_desc = resolve_phi(phi, coeff)
        if abs(float(np.asarray(phi_raw(np.array([0.0])))[0])) > 0:
            raise ValueError("phi(0) must vanish")
        self.phi = cap_phi(phi_raw, coeff.a)
        n = max(2, math.ceil(self.nodes_per_unit * self.M))
        n += n % 2
        self.n_intervals = n
        self._pos = _SideTables(self.phi, coeff.a, self.M, n, 1.0)
        self._neg = _SideTables(self.phi, coeff.a, self.M, n, -1.0)

    def _eval(self, k, attr: str, parity: str):
        k = self._check(k)
        ak = np.abs(k)
        pos = getattr(self._pos, attr)(ak)
        neg = getattr(self._neg, attr)(ak)
        if parity == "odd":
            neg = -neg
        return _out(np.where(k >= 0, pos, neg), k)

    def Phi(self, k):
        return self._eval(k, "P", "odd")

    def Phi_prime(self, k):
        return self._eval(k, "d1", "even")

    def Phi_second(self, k):
        k = self._check(k)
        ak = np.abs(k)
        out = np.where(k >= 0, self._pos.I1(ak) ** 2, -self._neg.I1(ak) ** 2)
        return _out(out, k)

    def inner_integral(self, k):
        """``∫_0^k φ(x/2) dx``, whose square is ``|Φ''(k)|``."""
        return self._eval(k, "I1", "odd")

    def V(self, k):
        return self._eval(k, "V", "odd")

    def V_prime(self, k):
        return self._eval(k, "vprime", "even")

    def grad_potential(self, k):
        return self._eval(k, "G", "odd")

    def U(self, v):
        """Inverse of ``V`` by vectorised bisection on ``[0, M]`` per sign."""
        v = self._check_v(v)
        flat = np.atleast_1d(v).ravel()
        out = np.zeros_like(flat)
        for side, sel in ((self._pos, flat > 0), (self._neg, flat < 0)):
            if not np.any(sel):
                continue
            target = np.abs(flat[sel])
            lo = np.zeros_like(target)
            hi = np.full_like(target, self.M)
            for _ in range(U_MAXITER):
                mid = 0.5 * (lo + hi)
                below = side.V(mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
                if np.all(hi - lo <= U_RTOL * hi):
                    break
            out[sel] = side.sign * 0.5 * (lo + hi)
        return _out(out.reshape(np.shape(v)), v)

    def to_config(self) -> dict:
        if self._phi_desc is None:
            raise ValueError("a callable phi has no config representation")
        cfg = {
            **self.coeff.to_config(),
            "alpha": self.alpha,
            "M": self.M,
            "mode": "quadrature",
            "nodes_per_unit": self.nodes_per_unit,
            "phi": self._phi_desc,
        }
        if self.alpha_u is not None:
            cfg["alpha_u"] = self.alpha_u
        return cfg


def make_quadrature_spec(coeff: CoefficientFunction, M: float, phi=None, nodes_per_unit: int = 1024, **kw) -> QuadratureTransform:
    return QuadratureTransform(coeff, M, phi=phi, nodes_per_unit=nodes_per_unit, **kw)


def transform_from_config(cfg: dict) -> TransformSpec:
    mode = cfg.get("mode", "closed_form")
    if mode == "closed_form":
        if cfg.get("kind", "power_law") != "power_law":
            raise ValueError("closed_form mode requires kind = power_law")
        return make_powerlaw_spec(cfg["m"], cfg["alpha"], cfg["M"], cfg.get("alpha_u"))
    if mode == "quadrature":
        coeff = coefficient_from_config(cfg)
        return QuadratureTransform(
            coeff,
            cfg["M"],
            phi=cfg.get("phi", "a2"),
            nodes_per_unit=int(cfg.get("nodes_per_unit", 1024)),
            alpha=cfg.get("alpha"),
            alpha_u=cfg.get("alpha_u"),
        )
    raise ValueError(f"unknown mode {mode!r}")
