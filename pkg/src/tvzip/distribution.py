"""Zero-inflated Poisson mass function and conditional moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConstraintError


@dataclass(frozen=True)
class ZipParams:
    """Poisson intensity ``lam`` and zero-inflation probability ``omega``.

    ``omega = 0`` is accepted so the plain Poisson case can be evaluated.
    """

    lam: float
    omega: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConstraintError(f"lambda must be > 0, got {self.lam}")
        if not 0.0 <= self.omega < 1.0:
            raise ConstraintError(f"omega must lie in [0, 1), got {self.omega}")


def zip_pmf(k, zp: ZipParams):
    """``P(X = k)`` for ``X ~ ZIP(lam, omega)``; vectorised over ``k``."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise ConstraintError("k must be nonnegative")
    k_f = k_arr.astype(float)
    poisson = np.exp(k_f * np.log(zp.lam) - zp.lam - gammaln(k_f + 1.0))
    out = (1.0 - zp.omega) * poisson + np.where(k_arr == 0, zp.omega, 0.0)
    return float(out) if out.ndim == 0 else out


def conditional_moments(zp: ZipParams) -> tuple[float, float]:
    """Mean ``(1 - omega) lam`` and variance ``(1 - omega) lam (1 + omega lam)``."""
    mean = (1.0 - zp.omega) * zp.lam
    return mean, mean * (1.0 + zp.omega * zp.lam)


def dispersion_ratio(zp: ZipParams) -> float:
    """Variance over mean, ``1 + omega lam``."""
    return 1.0 + zp.omega * zp.lam
