"""Level-set transform for degenerate parabolic equations ``u_t = a(u)Δu + f(u)``.

The substitution ``v = V(u)`` turns a weak solution whose raw derivatives jump
at the free boundary into one of ``∂_t v = ∇·(a(U(v))∇v) + f̄`` with Hölder
continuous terms. This package builds ``Φ``, ``V`` and ``U``, samples the
Barenblatt solution, solves the equation numerically and measures discrete
Hölder norms and residuals on either side of the transform.
"""

__version__ = "0.1.0"

from .barenblatt import BarenblattParams, barenblatt_derivatives, barenblatt_value, support_radius
from .coefficients import CoefficientFunction, constant, power_law
from .grid import RegionMask, ScalarField, SpaceTimeGrid, make_grid
from .holder import HolderReport, PsiProfile, holder_seminorm, parabolic_norm_2plus, psi_profile
from .residuals import (
    ResidualReport,
    Scenario,
    convergence_study,
    identity_residual_analytic,
    residual_original,
    residual_transformed,
)
from .solver import PMEProblem, SolverError, solve
from .transform import ClosedFormTransform, QuadratureTransform, make_powerlaw_spec, make_quadrature_spec

__all__ = [
    "BarenblattParams", "barenblatt_value", "barenblatt_derivatives", "support_radius",
    "CoefficientFunction", "power_law", "constant",
    "SpaceTimeGrid", "ScalarField", "RegionMask", "make_grid",
    "HolderReport", "PsiProfile", "holder_seminorm", "parabolic_norm_2plus", "psi_profile",
    "ResidualReport", "Scenario", "convergence_study", "identity_residual_analytic",
    "residual_original", "residual_transformed",
    "PMEProblem", "SolverError", "solve",
    "ClosedFormTransform", "QuadratureTransform", "make_powerlaw_spec", "make_quadrature_spec",
]
