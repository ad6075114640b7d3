"""Conserved functionals and the variational gradient.

All integrals run over one antiperiod [0, T]; for an antiperiodic field
|u| is T-periodic, so Parseval gives int_0^T |u|^2 = T sum |c_k|^2.
Inner products are real: <u, v> = Re int_0^T u conj(v) dx.

Conventions: charge Q = (1/2) int |u|^2, momentum N = (i/2) int conj(u) u',
kinetic K = (1/2) int |Lambda^(alpha/2) u|^2, potential
P = 1/(2 sigma + 2) int |u|^(2 sigma + 2), hamiltonian H = K - gamma P,
so the defocusing sign gamma = -1 gives H = K + P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntiperiodicityViolation
from .fields import (AntiperiodicField, GridSamples, apply_multiplier, derivative,
                     fractional_laplacian, to_grid, to_modes)
from .params import EPS_ANTI, ProblemParams


def inner(u: AntiperiodicField, v: AntiperiodicField) -> float:
    """Re int_0^T u conj(v) dx = Re[T sum u_k conj(v_k)] (equal bands)."""
    if not np.array_equal(u.wavenumbers, v.wavenumbers):
        from .fields import _aligned
        u, v = _aligned(u, v)
    return float(np.real(u.half_period * np.sum(u.coeff * np.conj(v.coeff))))


def l2_norm(u: AntiperiodicField) -> float:
    return float(np.sqrt(u.half_period) * np.linalg.norm(u.coeff))


def x_norm(u: AntiperiodicField, alpha: float) -> float:
    """Energy-space norm: (int_0^T |u|^2 + |Lambda^(alpha/2) u|^2)^(1/2)."""
    w = np.abs(np.pi * u.wavenumbers / u.half_period) ** alpha
    return float(np.sqrt(u.half_period * np.sum((1.0 + w) * np.abs(u.coeff) ** 2)))


def charge(u: AntiperiodicField) -> float:
    return 0.5 * u.half_period * float(np.sum(np.abs(u.coeff) ** 2))


def momentum(u: AntiperiodicField) -> float:
    """N(u) = -(pi/2) sum_k k |c_k|^2; vanishes for real fields."""
    return -0.5 * np.pi * float(np.sum(u.wavenumbers * np.abs(u.coeff) ** 2))


def kinetic(u: AntiperiodicField, alpha: float) -> float:
    w = np.abs(np.pi * u.wavenumbers / u.half_period) ** alpha
    return 0.5 * u.half_period * float(np.sum(w * np.abs(u.coeff) ** 2))


def _default_grid(u: AntiperiodicField, sigma: float) -> int:
    """Grid large enough that |u|^(2 sigma) u and |u|^(2 sigma + 2) are
    quadratured without aliasing into the resolved band.

    For integer sigma the product bandwidth is (2 sigma + 2) max|k| and the
    bound is exact; fractional powers are not band-limited, so a margin of
    two extra factors is applied and the residual defect is monitored.
    """
    k_max = u.max_wavenumber
    factor = 2.0 * sigma + 2.0 if float(sigma).is_integer() else 2.0 * np.ceil(sigma) + 4.0
    need = int(factor) * k_max + 2
    n = max(4 * u.n_modes, need)
    return n + (n % 2)


def _nonlinear_samples(u: AntiperiodicField, sigma: float, n_grid: int | None):
    if n_grid is None:
        n_grid = _default_grid(u, sigma)
    g = to_grid(u, n_grid)
    return g, np.abs(g.values) ** (2.0 * sigma)


def potential(u: AntiperiodicField, sigma: float, n_grid: int | None = None) -> float:
    """P(u) by trapezoid quadrature on the oversampled grid (spectrally exact
    for resolved data; |u|^(2 sigma + 2) is T-periodic so one period is half
    the 2T grid sum)."""
    g, mod = _nonlinear_samples(u, sigma, n_grid)
    dx = 2.0 * u.half_period / g.n
    integral = 0.5 * float(np.sum(mod * np.abs(g.values) ** 2)) * dx
    return integral / (2.0 * sigma + 2.0)


def nonlinear_term(u: AntiperiodicField, sigma: float,
                   n_grid: int | None = None,
                   defect_tol: float = EPS_ANTI) -> AntiperiodicField:
    """|u|^(2 sigma) u projected back to the odd band of u.

    Computed pointwise on a grid with N >= 4M.  The even-mode (aliasing)
    defect of the product is monitored against `defect_tol`.
    """
    g, mod = _nonlinear_samples(u, sigma, n_grid)
    prod = GridSamples(u.half_period, mod * g.values)
    if prod.antiperiodic_defect() > defect_tol:
        raise AntiperiodicityViolation("nonlinear product lost antiperiodicity")
    return to_modes(prod, u.n_modes, tol=defect_tol)


def hamiltonian(u: AntiperiodicField, params: ProblemParams,
                n_grid: int | None = None) -> float:
    return kinetic(u, params.alpha) - params.gamma * potential(u, params.sigma, n_grid)


def moving_frame_energy(u: AntiperiodicField, c: float, params: ProblemParams,
                        n_grid: int | None = None) -> float:
    """H + c N, the objective minimized at fixed charge."""
    return hamiltonian(u, params, n_grid) + c * momentum(u)


def quadratic_energy(u: AntiperiodicField, omega: float, alpha: float) -> float:
    """K + omega Q, the objective minimized at fixed potential."""
    return kinetic(u, alpha) + omega * charge(u)


def lagrangian(u: AntiperiodicField, c: float, omega: float,
               params: ProblemParams, n_grid: int | None = None) -> float:
    return (hamiltonian(u, params, n_grid) + omega * charge(u)
            + c * momentum(u))


def gradient(u: AntiperiodicField, c: float, omega: float,
             params: ProblemParams, n_grid: int | None = None) -> AntiperiodicField:
    """First variation of the Lagrangian with respect to <.,.>:

        Lambda^alpha u + omega u + i c u' - gamma |u|^(2 sigma) u.
    """
    lam = apply_multiplier(u, fractional_laplacian(u.half_period, params.alpha))
    dx = apply_multiplier(u, derivative(u.half_period))
    nl = nonlinear_term(u, params.sigma, n_grid)
    return lam + omega * u + (1j * c) * dx + (-params.gamma) * nl


@dataclass(frozen=True)
class FunctionalValues:
    charge: float
    momentum: float
    kinetic: float
    potential: float
    hamiltonian: float
    moving_frame_energy: float
    lagrangian: float


def functional_values(u: AntiperiodicField, params: ProblemParams,
                      c: float = 0.0, omega: float = 0.0,
                      n_grid: int | None = None) -> FunctionalValues:
    q = charge(u)
    n = momentum(u)
    k = kinetic(u, params.alpha)
    p = potential(u, params.sigma, n_grid)
    h = k - params.gamma * p
    return FunctionalValues(q, n, k, p, h, h + c * n, h + omega * q + c * n)
