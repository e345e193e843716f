"""The Lyapunov energy, its sign decomposition, residuals and inequalities.

F(phi) = 1/2 phi^T A phi - (alpha/q) sum_i h |phi_i|^q, with the power term
mass-lumped.  Lumping makes the decomposition into positive and negative
parts exact: F(phi) = F(phi+) + F(phi-) + cross(phi), where the cross term
-(phi+)^T A (phi-) is the discrete double integral coupling the two nodal
sign supports (nonnegative whenever the form has the M-matrix sign pattern).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParamsMismatchError, ValidationError
from .frlap import StiffnessForm, assemble_form, bilinear
from .grid import EnergyParams, Grid, GridFunction, _odd_power, neg_part, pos_part

__all__ = [
    "EnergyBreakdown",
    "energy",
    "energy_scale",
    "cross_term",
    "critical_residual",
    "nehari_residual",
    "coercivity_constant",
    "bregman_gap",
    "midpoint_gap",
    "s_to_one_diagnostic",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    seminorm_half: float  # 1/2 [phi]^2
    potential: float  # (alpha/q) sum h |phi|^q
    total: float
    cross: float  # coupling term of the sign decomposition


def _check_params(form: StiffnessForm, p: EnergyParams) -> None:
    if p.s != form.s:
        raise ParamsMismatchError(f"params have s={p.s}, form has s={form.s}")


def energy(form: StiffnessForm, p: EnergyParams, phi: GridFunction) -> EnergyBreakdown:
    """Evaluate the energy with its breakdown and sign-coupling term."""
    _check_params(form, p)
    semi = 0.5 * bilinear(form, phi, phi)
    pot = (p.alpha / p.q) * float(np.sum(phi.grid.h * np.abs(phi.values) ** p.q))
    return EnergyBreakdown(
        seminorm_half=semi,
        potential=pot,
        total=semi - pot,
        cross=cross_term(form, phi),
    )


def energy_scale(form: StiffnessForm, p: EnergyParams, phi: GridFunction) -> float:
    """Residual scale max(1, |F(phi)|, [phi]^2), robust across magnitudes."""
    semi = bilinear(form, phi, phi)
    pot = (p.alpha / p.q) * float(np.sum(phi.grid.h * np.abs(phi.values) ** p.q))
    return max(1.0, abs(0.5 * semi - pot), semi)


def cross_term(form: StiffnessForm, phi: GridFunction) -> float:
    """-(phi+)^T A (phi-), the discrete kernel coupling of the nodal sign parts."""
    return -bilinear(form, pos_part(phi), neg_part(phi))


def critical_residual(form: StiffnessForm, p: EnergyParams, phi: GridFunction) -> float:
    """Relative lumped Galerkin residual of the stationarity equation."""
    a_phi = form.matvec(phi.values)
    rhs = p.alpha * phi.grid.h * _odd_power(phi.values, p.q - 1.0)
    return float(np.linalg.norm(a_phi - rhs) / max(1.0, np.linalg.norm(a_phi)))


def nehari_residual(
    form: StiffnessForm, p: EnergyParams, phi: GridFunction
) -> tuple[float, float]:
    """Deviation from the two identities satisfied by every critical point.

    r1 measures F(phi) = (1/2 - 1/q) [phi]^2 and r2 measures
    [phi]^2 = alpha sum h |phi|^q, both relative to the energy scale.
    """
    semi = bilinear(form, phi, phi)
    pot_q = float(np.sum(phi.grid.h * np.abs(phi.values) ** p.q))
    total = 0.5 * semi - (p.alpha / p.q) * pot_q
    scale = max(1.0, abs(total), semi)
    r1 = abs(total - (0.5 - 1.0 / p.q) * semi) / scale
    r2 = abs(semi - p.alpha * pot_q) / scale
    return r1, r2


def coercivity_constant(p: EnergyParams, lam1: float) -> float:
    """Constant C with F(u) >= 1/4 [u]^2 - C, from Young's inequality."""
    if lam1 <= 0.0:
        raise ValidationError(f"need lam1 > 0, got {lam1}")
    q = p.q
    return (2.0 - q) / (2.0 * q) * p.alpha ** (2.0 / (2.0 - q)) * (lam1 / 2.0) ** (
        -q / (2.0 - q)
    )


def bregman_gap(a, b, m: float):
    """Both sides of the Bregman lower bound f(a)-f(b)-f'(b)(a-b) >= C0 |g(a)-g(b)|^2.

    Here f(t) = |t|^(m+1)/(m+1), g(t) = |t|^((m-1)/2) t and C0 = (m+1)^-3.
    Accepts scalars or arrays; returns (lhs, rhs).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    f_a = np.abs(a) ** (m + 1.0) / (m + 1.0)
    f_b = np.abs(b) ** (m + 1.0) / (m + 1.0)
    df_b = _odd_power(np.atleast_1d(b), m).reshape(b.shape)
    lhs = f_a - f_b - df_b * (a - b)
    g_a = _odd_power(np.atleast_1d(a), (m + 1.0) / 2.0).reshape(a.shape)
    g_b = _odd_power(np.atleast_1d(b), (m + 1.0) / 2.0).reshape(b.shape)
    rhs = (m + 1.0) ** (-3.0) * (g_a - g_b) ** 2
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


def midpoint_gap(a, b, m: float):
    """Both sides of the strengthened midpoint convexity bound for |t|^(m+1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = 0.5 * np.abs(a) ** (m + 1.0) + 0.5 * np.abs(b) ** (m + 1.0)
    rhs = np.abs(0.5 * (a + b)) ** (m + 1.0) + 0.125 * np.maximum(
        np.abs(a), np.abs(b)
    ) ** (m - 1.0) * (a - b) ** 2
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


def s_to_one_diagnostic(
    grid: Grid, profile, s_list, quad_order: int = 8
) -> list[tuple[float, float]]:
    """Table of (s, (1-s) * cross) for a fixed profile, re-assembling per s.

    The renormalized coupling of the sign parts degenerates as s -> 1; the
    table makes the trend observable.  `profile` is a callable x -> values.
    """
    out = []
    for s in s_list:
        form = assemble_form(grid, float(s), quad_order)
        phi = grid.interpolate(profile)
        out.append((float(s), (1.0 - float(s)) * cross_term(form, phi)))
    return out
