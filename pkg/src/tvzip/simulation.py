"""Simulation of TVZIP-INGARCH paths and the seasonal AR covariate.

Random numbers come from numpy's counter-based Philox generator. A seed is a
64-bit unsigned integer; each consumer draws from its own stream keyed by
``SeedSequence(seed, spawn_key=(stream,))`` so that, e.g., the covariate and
the counts of one replication never share random numbers, and replication
``j`` of a study (seed ``base + j``) never overlaps replication ``j + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .core import CountSeries, IngarchParams, ModelOrder, check_theta
from .errors import (AlignmentError, ConstraintError, EmptyInputError, MissingCovariateError,
                     NonStationaryError)
from .links import Link

COUNT_STREAM = 0
EXOG_STREAM = 1


def make_rng(seed: int, stream: int = COUNT_STREAM) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConstraintError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class SimulationSpec:
    order: ModelOrder
    params: IngarchParams
    link: Link
    n: int
    seed: int
    exog: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n < 1:
            raise EmptyInputError("series length n must be >= 1")
        if self.params.order != self.order:
            raise AlignmentError(f"params have order {self.params.order}, spec says {self.order}")
        if self.link.unknown:
            raise ConstraintError(f"link parameters {self.link.unknown} must be given to simulate")
        if self.exog is not None:
            exog = np.array(self.exog, dtype=float)
            if exog.shape != (self.n,):
                raise AlignmentError(f"exog has length {exog.size}, n = {self.n}")
            exog.setflags(write=False)
            object.__setattr__(self, "exog", exog)
        elif self.link.needs_exog:
            raise MissingCovariateError(f"{self.link.family} link needs an exogenous series")


@dataclass(frozen=True)
class SimulatedSeries:
    series: CountSeries
    lam: np.ndarray
    omega: np.ndarray

    @property
    def counts(self) -> np.ndarray:
        return self.series.counts


def simulate_tvzip(spec: SimulationSpec) -> SimulatedSeries:
    """Draw one path.

    At each ``t`` a uniform ``U_t`` is compared with ``omega_t``: the count is a
    structural zero when ``U_t <= omega_t`` and a Poisson(``lambda_t``) draw
    otherwise. ``lambda_t`` is updated from the simulated counts.
    """
    order = spec.order
    theta = spec.params.as_vector()
    check_theta(theta, order)
    n, p, q = spec.n, order.p, order.q
    alpha0, alpha, beta = theta[0], theta[1:1 + p], theta[1 + p:]

    t = np.arange(1, n + 1, dtype=float)
    omega = spec.link.omega_from(spec.link.gamma(), t, spec.exog)
    rng = make_rng(spec.seed, COUNT_STREAM)
    uniforms = rng.random(n)

    counts = np.zeros(n, dtype=np.int64)
    lam = np.zeros(n)
    for i in range(n):
        mean = alpha0
        for k in range(1, min(p, i) + 1):
            mean += alpha[k - 1] * counts[i - k]
        for k in range(1, min(q, i) + 1):
            mean += beta[k - 1] * lam[i - k]
        lam[i] = mean
        if uniforms[i] > omega[i]:
            counts[i] = rng.poisson(mean)

    lam.setflags(write=False)
    omega = np.array(omega)
    omega.setflags(write=False)
    return SimulatedSeries(CountSeries(counts, spec.exog), lam, omega)


def simulate_seasonal_ar(eta: float, s: int, n: int, seed: int) -> np.ndarray:
    """``V_t = eta V_{t-s} + eps_t`` with standard normal ``eps_t`` and zero pre-sample."""
    if not abs(eta) < 1:
        raise NonStationaryError(f"|eta| must be < 1, got {eta}")
    if int(s) != s or s < 1:
        raise ConstraintError(f"period s must be a positive integer, got {s}")
    if n < 1:
        raise EmptyInputError("series length n must be >= 1")
    eps = make_rng(seed, EXOG_STREAM).standard_normal(int(n))
    if eta == 0:
        return eps
    a = np.zeros(int(s) + 1)
    a[0], a[-1] = 1.0, -eta
    return lfilter([1.0], a, eps)
