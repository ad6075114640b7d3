"""Traveling/standing wave profiles by constrained minimization.

Defocusing branch: minimize H + c N over the fixed-charge sphere
{Q = mu}, |c| < (pi/T)^(alpha-1).  Focusing branch: minimize K + omega Q
over {P = p0}, |omega| < (pi/T)^alpha, then rescale the minimizer by
|eta|^(1/(2 sigma)) (eta < 0 the constraint multiplier) so that it
solves the unit-coefficient profile equation

    Lambda^alpha phi + omega phi + i c phi' - gamma |phi|^(2 sigma) phi = 0.

The solver runs projected Barzilai-Borwein descent (gradient
preconditioned by (1 + Lambda^alpha)^(-1), renormalized onto the
constraint after every step) into the basin of a Newton polish on the
Euler-Lagrange system.  Residuals are reported as the infinity norm of
the full profile equation sampled on a refinement of the working grid,
so nonlinearity truncation shows up honestly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (GaugeAmbiguity, NonConvergence, OmegaOutOfRange,
                     PositiveEta, SpeedOutOfRange, ValidationError)
from .fields import (AntiperiodicField, cosine_field, evaluate, lift,
                     odd_wavenumbers, to_grid)
from .functionals import (charge, kinetic, momentum, moving_frame_energy,
                          potential, quadratic_energy)
from .params import MAX_ITER, TOL_PROFILE, ProblemParams

_NEWTON_GATE = 1e-5     # relative projected-gradient size that hands off to Newton
_BB_CAP = 20000         # descent iterations before giving up on the gate


@dataclass(frozen=True)
class StandingProfile:
    """A converged profile together with its run record.

    `mu` is the charge Q and `p0` the potential P of the stored field;
    `objective` is the attained constrained objective (H + cN at fixed Q
    on the defocusing branch, K + omega Q at fixed P on the focusing
    branch) kept so that independent runs can flag branch ambiguity.
    """

    params: ProblemParams
    field: AntiperiodicField
    omega: float
    c: float
    mu: float
    p0: float
    residual: float
    iterations: int
    objective: float


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: list
    profiles: list
    failed_at: float | None


def recovered_omega(field: AntiperiodicField, c: float, params: ProblemParams) -> float:
    """Frequency consistent with the profile equation, recovered by pairing
    the equation with the field: omega = -(2K + 2cN - gamma(2s+2)P) / (2Q)."""
    q = charge(field)
    if q <= 0:
        raise ValidationError("cannot recover omega from the zero field")
    k = kinetic(field, params.alpha)
    n = momentum(field)
    p = potential(field, params.sigma)
    return -(2.0 * k + 2.0 * c * n - params.gamma * (2.0 * params.sigma + 2.0) * p) / (2.0 * q)


def profile_residual(field: AntiperiodicField, omega: float, c: float,
                     params: ProblemParams, n_fine: int | None = None) -> float:
    """Infinity norm of Lambda^alpha phi + omega phi + i c phi' -
    gamma |phi|^(2s) phi on a fine grid (linear parts are band-limited
    exact; the nonlinearity is sampled pointwise, so out-of-band content
    is included)."""
    from .functionals import _default_grid

    if n_fine is None:
        n_fine = 2 * _default_grid(field, params.sigma)
    T = field.half_period
    k = field.wavenumbers
    w = np.pi * k / T
    lin_coeff = (np.abs(w) ** params.alpha + omega + 1j * c * (1j * w)) * field.coeff
    lin = to_grid(field.with_coeff(lin_coeff), n_fine).values
    vals = to_grid(field, n_fine).values
    nl = np.abs(vals) ** (2.0 * params.sigma) * vals
    return float(np.max(np.abs(lin - params.gamma * nl)))


# --- low-level mode/grid workspace -----------------------------------------

class _Workspace:
    """Precomputed lattice data for one (params, M, N) combination."""

    def __init__(self, params: ProblemParams, n_modes: int):
        from .functionals import _default_grid

        self.params = params
        self.T = params.half_period
        self.M = n_modes
        self.k = odd_wavenumbers(n_modes)
        self.w = np.pi * self.k / self.T
        self.lam = np.abs(self.w) ** params.alpha
        probe = AntiperiodicField(self.T, self.k, np.zeros(2 * n_modes, complex))
        self.N = _default_grid(probe, params.sigma)
        self.bins = self.k % self.N

    def grid_values(self, coeff: np.ndarray) -> np.ndarray:
        spec = np.zeros(self.N, dtype=np.complex128)
        spec[self.bins] = coeff
        return np.fft.ifft(spec) * self.N

    def band_coeff(self, values: np.ndarray) -> np.ndarray:
        return (np.fft.fft(values) / self.N)[self.bins]

    def nonlinear(self, coeff: np.ndarray) -> np.ndarray:
        v = self.grid_values(coeff)
        return self.band_coeff(np.abs(v) ** (2.0 * self.params.sigma) * v)

    def field(self, coeff: np.ndarray) -> AntiperiodicField:
        return AntiperiodicField(self.T, self.k, coeff)

    def charge(self, coeff) -> float:
        return 0.5 * self.T * float(np.sum(np.abs(coeff) ** 2))

    def inner(self, a, b) -> float:
        return float(np.real(self.T * np.sum(a * np.conj(b))))


def _real_projection(coeff: np.ndarray) -> np.ndarray:
    """Nearest coefficient vector of a real field (c_{-k} = conj c_k)."""
    return 0.5 * (coeff + np.conj(coeff[::-1]))


def _bb_descent(ws: _Workspace, u: np.ndarray, grad_fn, project_fn, renorm_fn,
                max_iter: int, keep_real: bool):
    """Projected, preconditioned Barzilai-Borwein descent to the Newton gate.

    With keep_real the iterates are projected onto the real-field cone
    every step.  The real restriction is structural, not cosmetic: in the
    full complex class the fixed-charge energy descends past the real
    branch toward the constant-modulus single-mode wave (which minimizes
    kinetic and potential terms simultaneously), and roundoff-seeded
    imaginary noise grows exponentially along that direction.  The branch
    all downstream theory lives on is the real one.

    Returns (u, iterations, reached_gate)."""
    pre = 1.0 / (1.0 + ws.lam)
    if keep_real:
        u = _real_projection(u)
    u = renorm_fn(u)
    step = 0.2
    u_prev = None
    d_prev = None
    for it in range(max_iter):
        g = grad_fn(u)
        gt = project_fn(g, u)
        scale = max(float(np.linalg.norm(u)), 1e-30)
        if np.linalg.norm(gt) / scale < _NEWTON_GATE:
            return u, it, True
        d = project_fn(pre * gt, u)
        if u_prev is not None:
            du = u - u_prev
            dd = d - d_prev
            denom = ws.inner(du, dd)
            if abs(denom) > 1e-300:
                step = abs(ws.inner(du, du) / denom)
            step = min(max(step, 1e-4), 1e3)
        u_prev, d_prev = u, d
        u = u - step * d
        if keep_real:
            u = _real_projection(u)
        u = renorm_fn(u)
    return u, max_iter, False


def _even_cos_coeffs(ws: _Workspace, coeff: np.ndarray) -> np.ndarray:
    """cos((2j+1) pi x / T) coefficients of a real even field."""
    pos = coeff[ws.M:]
    return 2.0 * np.real(pos)


def _coeff_from_even_cos(ws: _Workspace, a: np.ndarray) -> np.ndarray:
    c = np.concatenate([a[::-1], a]) / 2.0
    return c.astype(np.complex128)


def _even_multiplication_matrix(ws: _Workspace, samples: np.ndarray) -> np.ndarray:
    """Matrix of pointwise multiplication by a real even T-periodic function
    in the cos((2j+1) pi x / T) basis: 0.5 (w_|j-l| + w_{j+l+1}) with
    w_m = (1/T) int_0^{2T} V cos(2 pi m x / T) dx."""
    n = len(samples)
    m_max = 2 * ws.M - 1
    if 2 * m_max >= n:
        raise ValidationError("quadrature grid too small for multiplication matrix")
    spec = np.fft.fft(samples.astype(np.complex128)) / n
    wm = 2.0 * np.real(spec[2 * np.arange(m_max + 1)])
    j = np.arange(ws.M)
    return 0.5 * (wm[np.abs(j[:, None] - j[None, :])] + wm[j[:, None] + j[None, :] + 1])


def _newton_real_even(ws: _Workspace, a: np.ndarray, omega: float,
                      mu: float | None, tol: float, max_steps: int = 60):
    """Newton polish on the real even branch.

    With `mu` given (defocusing) omega is an unknown and the charge
    constraint closes the system; otherwise omega is held fixed
    (focusing).  Returns (a, omega, n_steps) or raises NonConvergence.
    """
    gamma = ws.params.gamma
    sig = ws.params.sigma
    lam_e = (np.pi * (2 * np.arange(ws.M) + 1) / ws.T) ** ws.params.alpha

    def residual_vec(a, omega):
        coeff = _coeff_from_even_cos(ws, a)
        nl = ws.nonlinear(coeff)
        r = lam_e * a + omega * a - gamma * _even_cos_coeffs(ws, nl)
        if mu is not None:
            r = np.append(r, 0.25 * ws.T * np.sum(a * a) - mu)
        return r

    r = residual_vec(a, omega)
    for it in range(max_steps):
        norm_r = np.linalg.norm(r)
        if norm_r < 1e-13 * max(1.0, np.linalg.norm(a)):
            return a, omega, it
        coeff = _coeff_from_even_cos(ws, a)
        vals = ws.grid_values(coeff)
        wmat = _even_multiplication_matrix(
            ws, (2.0 * sig + 1.0) * np.abs(vals) ** (2.0 * sig))
        jac = np.diag(lam_e + omega) - gamma * wmat
        if mu is not None:
            jac = np.block([[jac, a[:, None]],
                            [0.5 * ws.T * a[None, :], np.zeros((1, 1))]])
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(f"singular Newton system: {exc}") from exc
        scale = 1.0
        for _ in range(12):
            a_new = a + scale * delta[: ws.M]
            om_new = omega + scale * (delta[ws.M] if mu is not None else 0.0)
            r_new = residual_vec(a_new, om_new)
            if np.linalg.norm(r_new) < norm_r:
                a, omega, r = a_new, om_new, r_new
                break
            scale *= 0.5
        else:
            return a, omega, it  # stalled; caller verifies the residual
    return a, omega, max_steps


def _newton_complex(ws: _Workspace, coeff: np.ndarray, omega: float, c: float,
                    mu: float, tol: float, max_steps: int = 60):
    """Bordered least-squares Newton for the complex traveling branch.

    The Jacobian is rank-deficient by the phase/translation symmetries;
    the minimal-norm step never moves along them.
    """
    gamma = ws.params.gamma
    sig = ws.params.sigma
    nm = 2 * ws.M
    lin = ws.lam + 1j * c * 1j * ws.w  # diagonal of Lambda^alpha + i c d/dx

    def residual_vec(coeff, omega):
        r = (lin + omega) * coeff - gamma * ws.nonlinear(coeff)
        return np.concatenate([np.real(r), np.imag(r),
                               [ws.charge(coeff) - mu]])

    r = residual_vec(coeff, omega)
    for it in range(max_steps):
        norm_r = np.linalg.norm(r)
        if norm_r < 1e-13 * max(1.0, np.linalg.norm(coeff)):
            return coeff, omega, it
        vals = ws.grid_values(coeff)
        w1 = (sig + 1.0) * np.abs(vals) ** (2.0 * sig)
        mod2 = np.abs(vals) ** 2
        safe = np.where(mod2 > 1e-300, mod2, 1.0)
        w2 = sig * np.abs(vals) ** (2.0 * sig) * np.where(mod2 > 1e-300,
                                                          vals * vals / safe, 0.0)
        # columns: real and imaginary unit perturbations of every mode
        basis = np.zeros((nm, 2 * nm), dtype=np.complex128)
        basis[:, :nm] = np.eye(nm)
        basis[:, nm:] = 1j * np.eye(nm)
        spec = np.zeros((ws.N, 2 * nm), dtype=np.complex128)
        spec[ws.bins, :] = basis
        vcols = np.fft.ifft(spec, axis=0) * ws.N
        prod = w1[:, None] * vcols + w2[:, None] * np.conj(vcols)
        pcols = (np.fft.fft(prod, axis=0) / ws.N)[ws.bins, :]
        jcols = (lin + omega)[:, None] * basis - gamma * pcols
        jac = np.zeros((2 * nm + 1, 2 * nm + 1))
        jac[:nm, : 2 * nm] = np.real(jcols)
        jac[nm: 2 * nm, : 2 * nm] = np.imag(jcols)
        jac[:nm, 2 * nm] = np.real(coeff)
        jac[nm: 2 * nm, 2 * nm] = np.imag(coeff)
        jac[2 * nm, :nm] = ws.T * np.real(coeff)
        jac[2 * nm, nm: 2 * nm] = ws.T * np.imag(coeff)
        delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        scale = 1.0
        for _ in range(12):
            co_new = coeff + scale * (delta[:nm] + 1j * delta[nm: 2 * nm])
            om_new = omega + scale * delta[2 * nm]
            r_new = residual_vec(co_new, om_new)
            if np.linalg.norm(r_new) < norm_r:
                coeff, omega, r = co_new, om_new, r_new
                break
            scale *= 0.5
        else:
            return coeff, omega, it  # stalled; caller verifies the residual
    return coeff, omega, max_steps


def _center_and_realify(ws: _Workspace, coeff: np.ndarray):
    """Translate the modulus maximum to 0 and rotate the global phase so the
    field is as real as possible, then return even-cos coefficients."""
    f = ws.field(coeff)
    x0 = _modulus_argmax(f)
    coeff = coeff * np.exp(1j * np.pi * ws.k * x0 / ws.T)
    big_w = np.sum(coeff * coeff[::-1])
    if abs(big_w) > 1e-14 * np.sum(np.abs(coeff) ** 2):
        coeff = coeff * np.exp(-0.5j * np.angle(big_w))
    a = _even_cos_coeffs(ws, 0.5 * (coeff + np.conj(coeff[::-1])))
    if np.sum(a) < 0.0:  # field value at x = 0
        a = -a
    return a


def _modulus_argmax(f: AntiperiodicField) -> float:
    """Location of max |f| on [0, T), refined by Newton on d|f|^2/dx.

    Locating the peak through function values alone stalls at sqrt(eps);
    the derivative root is conditioned like eps itself.
    """
    n = max(64, 8 * f.n_modes)
    g = to_grid(f, n)
    h = np.abs(g.values) ** 2
    j = int(np.argmax(h))
    x0 = float(g.x[j])
    dx = 2.0 * f.half_period / n
    w = 1j * np.pi * f.wavenumbers / f.half_period
    f1 = f.with_coeff(w * f.coeff)
    f2 = f.with_coeff(w * w * f.coeff)
    h_scale = float(np.max(h))
    x = x0
    for _ in range(50):
        v, v1, v2 = (evaluate(ff, x)[0] for ff in (f, f1, f2))
        hp = 2.0 * np.real(np.conj(v) * v1)
        hpp = 2.0 * np.real(np.conj(v) * v2) + 2.0 * abs(v1) ** 2
        if abs(hpp) < 1e-8 * h_scale * (np.pi / f.half_period) ** 2:
            raise GaugeAmbiguity("flat modulus peak: translation gauge undefined")
        step = -hp / hpp
        x += float(np.clip(step, -dx, dx))
        if abs(step) < 1e-15 * f.half_period:
            break
    return x % f.half_period


def solve_defocusing(params: ProblemParams, c: float = 0.0, mu: float = 1.0,
                     n_modes: int = 64, tol: float = TOL_PROFILE,
                     max_iter: int = MAX_ITER,
                     init: AntiperiodicField | None = None) -> StandingProfile:
    """Profile on the real-standing-wave branch at fixed charge Q = mu.

    At c = 0 this is the constrained minimizer of H over real
    antiperiodic fields (equivalently of H at fixed Q under the extra
    zero-momentum constraint): real, even, and decreasing away from its
    peak.  Over the full complex class the fixed-charge infimum of
    H + cN is attained at the constant-modulus single-mode wave instead,
    a degenerate object with no translation gauge and a c-independent
    momentum; the solver deliberately stays on the real branch, which is
    the one with a nondegenerate linearization.  For c != 0 the branch is
    continued out of c = 0 by Newton iteration (no descent phase, which
    would slide off the branch); intended for small |c|.
    """
    if params.gamma != -1:
        raise ValidationError("defocusing branch requires gamma = -1")
    if mu <= 0:
        raise ValidationError(f"charge constraint must be positive, got {mu}")
    if abs(c) >= params.speed_limit:
        raise SpeedOutOfRange(
            f"|c| = {abs(c)} outside the admissible window (0, {params.speed_limit})")
    ws = _Workspace(params, n_modes)

    def renorm(u):
        q = ws.charge(u)
        if q <= 0:
            raise NonConvergence("charge collapsed during descent")
        return u * math.sqrt(mu / q)

    if abs(c) < 1e-14:
        if init is not None:
            u = lift(init, n_modes).coeff.copy()
        else:
            amp = 2.0 * math.sqrt(mu / params.half_period)
            u = lift(cosine_field(params.half_period, amp), n_modes).coeff

        def grad(u):
            return ws.lam * u - params.gamma * ws.nonlinear(u)

        def project(g, u):
            return g - (ws.inner(g, u) / (2.0 * mu)) * u

        u, it_bb, _ = _bb_descent(ws, u, grad, project, renorm,
                                  min(_BB_CAP, max_iter), keep_real=True)
        omega = recovered_omega(ws.field(u), 0.0, params)
        a = _center_and_realify(ws, u)
        a, omega, it_newton = _newton_real_even(ws, a, omega, mu, tol)
        u = _coeff_from_even_cos(ws, a)
    else:
        it_bb = 0
        if init is not None:
            u = renorm(lift(init, n_modes).coeff.copy())
        else:
            base = solve_defocusing(params, 0.0, mu, n_modes, tol, max_iter)
            it_bb = base.iterations
            u = base.field.coeff.copy()
        omega = recovered_omega(ws.field(u), c, params)
        u, omega, it_newton = _newton_complex(ws, u, omega, c, mu, tol)

    field = ws.field(u)
    res = profile_residual(field, omega, c, params)
    iterations = it_bb + it_newton
    if res > tol:
        raise NonConvergence(
            f"profile residual {res:.3e} above tolerance {tol:.3e} "
            f"after {iterations} iterations (n_modes={n_modes})")
    return StandingProfile(params, field, omega, c, charge(field),
                           potential(field, params.sigma), res, iterations,
                           moving_frame_energy(field, c, params))


def solve_focusing(params: ProblemParams, omega: float, p0: float = 1.0,
                   n_modes: int = 64, tol: float = TOL_PROFILE,
                   max_iter: int = MAX_ITER,
                   init: AntiperiodicField | None = None) -> StandingProfile:
    """Minimizer of K + omega Q on {P = p0}, rescaled onto the profile
    equation with unit nonlinearity coefficient."""
    if params.gamma != 1:
        raise ValidationError("focusing branch requires gamma = +1")
    if p0 <= 0:
        raise ValidationError(f"potential constraint must be positive, got {p0}")
    if abs(omega) >= params.frequency_limit:
        raise OmegaOutOfRange(
            f"|omega| = {abs(omega)} outside (0, {params.frequency_limit})")
    ws = _Workspace(params, n_modes)
    sig = params.sigma

    if init is not None:
        u = lift(init, n_modes).coeff.copy()
    else:
        u = lift(cosine_field(params.half_period, 1.0), n_modes).coeff

    def pot(u):
        vals = ws.grid_values(u)
        dx = 2.0 * ws.T / ws.N
        return 0.5 * float(np.sum(np.abs(vals) ** (2 * sig + 2))) * dx / (2 * sig + 2)

    def renorm(u):
        p = pot(u)
        if p <= 0:
            raise NonConvergence("potential collapsed during descent")
        return u * (p0 / p) ** (1.0 / (2.0 * sig + 2.0))

    def grad(u):
        return (ws.lam + omega) * u

    def project(g, u):
        n = ws.nonlinear(u)
        denom = ws.inner(n, n)
        return g - (ws.inner(g, n) / denom) * n

    u, it_bb, _ = _bb_descent(ws, u, grad, project, renorm,
                              min(_BB_CAP, max_iter), keep_real=True)

    r_omega = quadratic_energy(ws.field(u), omega, params.alpha)
    eta = -r_omega / ((sig + 1.0) * p0)
    if eta >= 0.0:
        raise PositiveEta(f"constraint multiplier eta = {eta} is not negative")
    u = u * abs(eta) ** (1.0 / (2.0 * sig))

    a = _center_and_realify(ws, u)
    a, omega, it_newton = _newton_real_even(ws, a, omega, None, tol)
    u = _coeff_from_even_cos(ws, a)

    field = ws.field(u)
    res = profile_residual(field, omega, 0.0, params)
    iterations = it_bb + it_newton
    if res > tol:
        raise NonConvergence(
            f"profile residual {res:.3e} above tolerance {tol:.3e} "
            f"after {iterations} iterations (n_modes={n_modes})")
    return StandingProfile(params, field, omega, 0.0, charge(field),
                           potential(field, sig), res, iterations,
                           quadratic_energy(field, omega, params.alpha))


def evenness_defect(f: AntiperiodicField) -> float:
    """sup |f(x) - f(-x)| / sup |f|."""
    g = to_grid(f, max(64, 8 * f.n_modes))
    flip = np.roll(g.values[::-1], 1)  # values at -x_j on the same grid
    scale = np.max(np.abs(g.values))
    return float(np.max(np.abs(g.values - flip)) / max(scale, 1e-300))


def gauge_fix(p: StandingProfile) -> StandingProfile:
    """Normalize the free symmetries: translate the modulus maximum to
    x = 0, then rotate the global phase to maximize the real part, fixing
    the sign so the field is positive at the origin."""
    f = p.field
    x0 = _modulus_argmax(f)
    coeff = f.coeff * np.exp(1j * np.pi * f.wavenumbers * x0 / f.half_period)
    big_w = np.sum(coeff * coeff[::-1])
    if abs(big_w) < 1e-12 * np.sum(np.abs(coeff) ** 2):
        raise GaugeAmbiguity("phase gauge undefined: int phi^2 vanishes")
    coeff = coeff * np.exp(-0.5j * np.angle(big_w))
    val0 = np.sum(coeff)  # field value at x = 0
    if np.real(val0) < 0.0:
        coeff = -coeff
    return replace(p, field=f.with_coeff(coeff))


def continue_in(start: StandingProfile, parameter: str, target: float,
                steps: int, tol: float = TOL_PROFILE) -> Sweep:
    """Warm-started parameter sweep from `start` to `target`.

    On NonConvergence the sweep stops and returns the partial result with
    `failed_at` set; already-converged profiles are kept.
    """
    params = start.params
    allowed = {"c", "mu"} if params.gamma == -1 else {"omega"}
    if parameter not in allowed:
        raise ValidationError(
            f"parameter {parameter!r} not available on this branch; use {sorted(allowed)}")
    if steps < 1:
        raise ValidationError("sweep needs at least one step")
    start_value = {"c": start.c, "mu": start.mu, "omega": start.omega}[parameter]
    values = list(np.linspace(start_value, target, steps + 1)[1:])
    profiles = [start]
    prev = start
    for v in values:
        try:
            if params.gamma == -1:
                c = v if parameter == "c" else prev.c
                mu = v if parameter == "mu" else prev.mu
                prof = solve_defocusing(params, c=c, mu=mu,
                                        n_modes=prev.field.n_modes, tol=tol,
                                        init=prev.field)
            else:
                prof = solve_focusing(params, omega=v, p0=prev.p0,
                                      n_modes=prev.field.n_modes, tol=tol,
                                      init=prev.field)
        except NonConvergence:
            return Sweep(parameter, [start_value] + values, profiles, float(v))
        profiles.append(prof)
        prev = prof
    return Sweep(parameter, [start_value] + values, profiles, None)
