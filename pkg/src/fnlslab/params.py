"""Problem parameters and tolerance constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

# Default tolerances used across the package.
EPS_FFT = 1e-12      # transform round-trip accuracy (relative)
EPS_REAL = 1e-10     # realness defect (relative)
EPS_ANTI = 1e-10     # antiperiodicity / even-mode defect (relative)
TOL_PROFILE = 1e-9   # profile-equation residual, infinity norm
MAX_ITER = 50000     # iteration cap for the profile solvers


@dataclass(frozen=True)
class ProblemParams:
    """Half-period, dispersion order, nonlinearity power, sign.

    The field lives on x in [0, 2T) with f(x + T) = -f(x); `half_period`
    is T.  `alpha` is the order of the fractional dispersion, restricted
    to (1, 2] (2 included for classical-limit oracle runs).  `sigma` is
    the nonlinearity power in |u|^(2 sigma) u, and `gamma` is +1 for the
    focusing sign, -1 for the defocusing sign.
    """

    alpha: float
    sigma: float
    gamma: int
    half_period: float

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ValidationError(f"alpha must lie in (1, 2], got {self.alpha}")
        if not self.sigma > 0.0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if self.gamma not in (-1, 1):
            raise ValidationError(f"gamma must be +1 or -1, got {self.gamma}")
        if not (self.half_period > 0.0 and math.isfinite(self.half_period)):
            raise ValidationError(
                f"half_period must be positive and finite, got {self.half_period}"
            )

    @property
    def fundamental_wavenumber(self) -> float:
        """pi/T, the smallest admissible frequency magnitude."""
        return math.pi / self.half_period

    @property
    def speed_limit(self) -> float:
        """(pi/T)^(alpha-1), the admissible |c| window for traveling waves."""
        return self.fundamental_wavenumber ** (self.alpha - 1.0)

    @property
    def frequency_limit(self) -> float:
        """(pi/T)^alpha, the admissible |omega| window for the focusing branch."""
        return self.fundamental_wavenumber ** self.alpha
