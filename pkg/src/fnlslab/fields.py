"""Antiperiodic fields on the odd Fourier lattice.

A T-antiperiodic function, f(x + T) = -f(x), is exactly a 2T-periodic
function whose Fourier support lies on the odd lattice:

    f(x) = sum_k c_k exp(i pi k x / T),   k odd, |k| <= 2M - 1.

Fields are immutable; grids are uniform with x_j = 2T j / N over one
2T period.  Transforms go through the FFT with coefficients placed at
bins k mod N, so grid sampling and mode extraction are exact (to
roundoff) for band-limited data.  Real fields satisfy c_{-k} =
conj(c_k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AntiperiodicityViolation, ComplexInput, SamplingError, ValidationError
from .params import EPS_ANTI, EPS_REAL


def odd_wavenumbers(n_modes: int) -> np.ndarray:
    """Odd integers -(2M-1), ..., -1, 1, ..., 2M-1 for M = n_modes."""
    if n_modes < 1:
        raise ValidationError(f"need at least one mode, got {n_modes}")
    return np.arange(-(2 * n_modes - 1), 2 * n_modes, 2, dtype=np.int64)


@dataclass(frozen=True)
class AntiperiodicField:
    half_period: float
    wavenumbers: np.ndarray  # odd integers, ascending
    coeff: np.ndarray        # complex amplitudes, aligned with wavenumbers

    def __post_init__(self):
        k = np.asarray(self.wavenumbers, dtype=np.int64)
        c = np.asarray(self.coeff, dtype=np.complex128)
        if k.shape != c.shape or k.ndim != 1:
            raise ValidationError("wavenumbers and coeff must be aligned 1-d arrays")
        if np.any(k % 2 == 0):
            raise ValidationError("wavenumbers must all be odd")
        if np.any(np.diff(k) <= 0):
            raise ValidationError("wavenumbers must be strictly increasing")
        if self.half_period <= 0:
            raise ValidationError(f"half_period must be positive, got {self.half_period}")
        k.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "coeff", c)

    @property
    def n_modes(self) -> int:
        return len(self.wavenumbers) // 2

    @property
    def max_wavenumber(self) -> int:
        return int(np.max(np.abs(self.wavenumbers)))

    def with_coeff(self, coeff: np.ndarray) -> "AntiperiodicField":
        return AntiperiodicField(self.half_period, self.wavenumbers.copy(), coeff)

    # Basic linear algebra.  Operands must share T; bands are unioned.
    def __add__(self, other: "AntiperiodicField") -> "AntiperiodicField":
        a, b = _aligned(self, other)
        return a.with_coeff(a.coeff + b.coeff)

    def __sub__(self, other: "AntiperiodicField") -> "AntiperiodicField":
        a, b = _aligned(self, other)
        return a.with_coeff(a.coeff - b.coeff)

    def __mul__(self, scalar: complex) -> "AntiperiodicField":
        return self.with_coeff(self.coeff * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "AntiperiodicField":
        return self.with_coeff(-self.coeff)

    def realness_defect(self) -> float:
        """Relative size of c_k - conj(c_{-k}); zero for real fields."""
        mirror = np.conj(self.coeff[::-1])
        scale = np.linalg.norm(self.coeff)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.coeff - mirror) / scale)

    def is_real(self, tol: float = EPS_REAL) -> bool:
        return self.realness_defect() <= tol


@dataclass(frozen=True)
class GridSamples:
    """Complex samples at x_j = 2T j / N, j = 0..N-1."""

    half_period: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 1:
            raise ValidationError("values must be a 1-d array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def x(self) -> np.ndarray:
        return 2.0 * self.half_period * np.arange(self.n) / self.n

    def antiperiodic_defect(self) -> float:
        """Relative norm of f(x + T) + f(x) on the grid (N even required)."""
        if self.n % 2 != 0:
            raise SamplingError("antiperiodicity check needs an even grid")
        half = self.n // 2
        scale = np.linalg.norm(self.values)
        if scale == 0.0:
            return 0.0
        mism = self.values[half:] + self.values[:half]
        return float(np.linalg.norm(mism) / scale)

    def real_values(self, tol: float = EPS_REAL) -> np.ndarray:
        scale = np.max(np.abs(self.values)) or 1.0
        if np.max(np.abs(self.values.imag)) > tol * scale:
            raise ComplexInput("samples have nonnegligible imaginary part")
        return self.values.real.copy()


@dataclass(frozen=True)
class Multiplier:
    """Fourier multiplier: field coefficients are scaled by symbol(k).

    The symbol is a vectorized map from odd integer wavenumbers to
    complex factors.  Self-adjointness on the 2T torus is equivalent to
    the symbol being real; skew terms come from odd imaginary symbols.
    """

    name: str
    symbol: Callable[[np.ndarray], np.ndarray]

    def __call__(self, k: np.ndarray) -> np.ndarray:
        return np.asarray(self.symbol(np.asarray(k)), dtype=np.complex128)


def to_grid(f: AntiperiodicField, n: int) -> GridSamples:
    """Sample a field at N uniform points of its 2T period.

    N must be even and large enough that every stored mode sits strictly
    inside the grid band (N >= 2 (max|k| + 1)); otherwise bins would
    collide and sampling would alias.
    """
    if n % 2 != 0:
        raise SamplingError(f"grid size must be even, got {n}")
    if n < 2 * (f.max_wavenumber + 1):
        raise SamplingError(
            f"grid size {n} too small for modes up to |k| = {f.max_wavenumber}"
        )
    spectrum = np.zeros(n, dtype=np.complex128)
    spectrum[f.wavenumbers % n] = f.coeff
    values = np.fft.ifft(spectrum) * n
    return GridSamples(f.half_period, values)


def even_mode_defect(g: GridSamples) -> float:
    """Relative l2 energy in even Fourier bins; zero for antiperiodic data."""
    spec = np.fft.fft(g.values) / g.n
    total = np.linalg.norm(spec)
    if total == 0.0:
        return 0.0
    return float(np.linalg.norm(spec[0::2]) / total)


def to_modes(g: GridSamples, n_modes: int | None = None,
             tol: float = EPS_ANTI) -> AntiperiodicField:
    """Extract odd-lattice coefficients from grid samples.

    Even-bin content is the antiperiodicity defect: it is measured
    against `tol` (relative) and discarded.  `n_modes` defaults to the
    full resolved odd band, M = N // 4.
    """
    n = g.n
    if n % 2 != 0 or n < 4:
        raise SamplingError(f"grid size must be even and >= 4, got {n}")
    if n_modes is None:
        n_modes = n // 4
    if n_modes < 1:
        raise SamplingError(f"grid of size {n} resolves no odd modes")
    k = odd_wavenumbers(n_modes)
    if k[-1] > n // 2 - 1:
        raise SamplingError(
            f"requested modes up to |k| = {k[-1]} but grid resolves |k| <= {n // 2 - 1}"
        )
    defect = even_mode_defect(g)
    if defect > tol:
        raise AntiperiodicityViolation(
            f"even-mode energy fraction {defect:.3e} exceeds tolerance {tol:.3e}"
        )
    spec = np.fft.fft(g.values) / n
    return AntiperiodicField(g.half_period, k, spec[k % n])


def apply_multiplier(f: AntiperiodicField, m: Multiplier) -> AntiperiodicField:
    return f.with_coeff(f.coeff * m(f.wavenumbers))


def fractional_laplacian(half_period: float, alpha: float) -> Multiplier:
    """Symbol |pi k / T|^alpha (the Calderon operator to the power alpha)."""
    w = np.pi / half_period

    def symbol(k):
        return np.abs(w * k) ** alpha

    return Multiplier(f"lambda^{alpha}", symbol)


def derivative(half_period: float) -> Multiplier:
    """Symbol i pi k / T."""
    w = np.pi / half_period

    def symbol(k):
        return 1j * w * k

    return Multiplier("d/dx", symbol)


def hilbert_transform() -> Multiplier:
    """Symbol i sign(k), fixed by requiring d/dx = H Lambda."""

    def symbol(k):
        return 1j * np.sign(k)

    return Multiplier("hilbert", symbol)


def heat_semigroup(half_period: float, alpha: float, t: float) -> Multiplier:
    """Symbol exp(-|pi k / T|^alpha t) for t >= 0."""
    if t < 0:
        raise ValidationError(f"semigroup time must be nonnegative, got {t}")
    w = np.pi / half_period

    def symbol(k):
        return np.exp(-np.abs(w * k) ** alpha * t)

    return Multiplier(f"heat({t})", symbol)


def schroedinger_step(half_period: float, alpha: float, omega: float,
                      dt: float) -> Multiplier:
    """Symbol exp(-i (|pi k / T|^alpha + omega) dt): exact linear flow."""
    w = np.pi / half_period

    def symbol(k):
        return np.exp(-1j * (np.abs(w * k) ** alpha + omega) * dt)

    return Multiplier(f"schroedinger({dt})", symbol)


def evaluate(f: AntiperiodicField, x: np.ndarray) -> np.ndarray:
    """Direct mode-sum evaluation at arbitrary points (O(NM); small inputs)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    phase = np.exp(1j * np.pi * np.outer(x, f.wavenumbers) / f.half_period)
    return phase @ f.coeff


def translate(f: AntiperiodicField, x0: float) -> AntiperiodicField:
    """f(. - x0); modes pick up the phase exp(-i pi k x0 / T)."""
    return f.with_coeff(f.coeff * np.exp(-1j * np.pi * f.wavenumbers * x0 / f.half_period))


def rotate_phase(f: AntiperiodicField, beta: float) -> AntiperiodicField:
    return f.with_coeff(f.coeff * np.exp(1j * beta))


def conjugate(f: AntiperiodicField) -> AntiperiodicField:
    """Pointwise complex conjugate; coefficients conjugate and flip k."""
    return f.with_coeff(np.conj(f.coeff[::-1]))


def real_part(f: AntiperiodicField) -> AntiperiodicField:
    return f.with_coeff(0.5 * (f.coeff + np.conj(f.coeff[::-1])))


def imag_part(f: AntiperiodicField) -> AntiperiodicField:
    """Im f as a real field (not i Im f)."""
    return f.with_coeff(0.5j * (np.conj(f.coeff[::-1]) - f.coeff))


def zero_field(half_period: float, n_modes: int) -> AntiperiodicField:
    k = odd_wavenumbers(n_modes)
    return AntiperiodicField(half_period, k, np.zeros(len(k), dtype=np.complex128))


def cosine_field(half_period: float, amplitude: float, n_modes: int = 1,
                 harmonic: int = 1) -> AntiperiodicField:
    """amplitude * cos(pi q x / T) embedded in an M-mode band (q odd)."""
    if harmonic % 2 == 0:
        raise ValidationError("cosine harmonic must be odd to stay antiperiodic")
    f = zero_field(half_period, max(n_modes, (harmonic + 1) // 2))
    c = f.coeff.copy()
    idx = np.searchsorted(f.wavenumbers, [harmonic, -harmonic])
    c[idx] = amplitude / 2.0
    return f.with_coeff(c)


def random_field(half_period: float, n_modes: int, rng: np.random.Generator,
                 decay: float = 2.0, real: bool = False,
                 scale: float = 1.0) -> AntiperiodicField:
    """Random smooth field with |c_k| ~ (1 + |k|)^(-decay)."""
    k = odd_wavenumbers(n_modes)
    sig = (1.0 + np.abs(k)) ** (-decay)
    c = sig * (rng.standard_normal(len(k)) + 1j * rng.standard_normal(len(k)))
    if real:
        c = 0.5 * (c + np.conj(c[::-1]))
    return AntiperiodicField(half_period, k, scale * c)


def lift(f: AntiperiodicField, n_modes: int) -> AntiperiodicField:
    """Re-embed into a band of at least M modes (zero padding)."""
    if n_modes < f.n_modes:
        raise ValidationError("lift cannot shrink the band; use to_modes for projection")
    k = odd_wavenumbers(n_modes)
    c = np.zeros(len(k), dtype=np.complex128)
    idx = np.searchsorted(k, f.wavenumbers)
    c[idx] = f.coeff
    return AntiperiodicField(f.half_period, k, c)


def _aligned(u: AntiperiodicField, v: AntiperiodicField):
    if u.half_period != v.half_period:
        raise ValidationError("fields live on different tori")
    m = max(u.n_modes, v.n_modes)
    return lift(u, m), lift(v, m)
