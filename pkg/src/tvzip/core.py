"""Structural types and the INGARCH conditional-mean recursion.

The recursion is

    lambda_t = alpha0 + sum_i alpha_i X_{t-i} + sum_j beta_j lambda_{t-j}

run forward from t = 1 with every pre-sample count and pre-sample mean set
to zero. Flattened coefficient vectors always use the layout
``(alpha0, alpha_1..alpha_p, beta_1..beta_q)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import AlignmentError, ConstraintError, EmptyInputError

#: Largest admissible value of sum(alpha_i) + sum(beta_j) used by the fitters.
PERSISTENCE_CAP = 1.0 - 1e-8


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelOrder:
    """Lag orders ``p`` (counts) and ``q`` (means); ``q = 0`` is INARCH(p)."""

    p: int
    q: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q:
            raise ConstraintError("model orders must be integers")
        if self.p < 1:
            raise ConstraintError(f"p must be >= 1, got {self.p}")
        if self.q < 0:
            raise ConstraintError(f"q must be >= 0, got {self.q}")

    @property
    def n_theta(self) -> int:
        return 1 + self.p + self.q

    def theta_names(self) -> list[str]:
        return (["alpha0"] + [f"alpha{i}" for i in range(1, self.p + 1)]
                + [f"beta{j}" for j in range(1, self.q + 1)])

    @classmethod
    def parse(cls, text: str) -> "ModelOrder":
        """Parse ``"p,q"`` (or just ``"p"``)."""
        parts = [s.strip() for s in str(text).split(",") if s.strip()]
        if not 1 <= len(parts) <= 2:
            raise ConstraintError(f"bad order {text!r}; expected 'p,q'")
        try:
            values = [int(s) for s in parts]
        except ValueError:
            raise ConstraintError(f"bad order {text!r}; expected 'p,q'") from None
        return cls(*values)

    def __str__(self):
        return f"{self.p},{self.q}"


@dataclass(frozen=True)
class IngarchParams:
    """Conditional-mean coefficients."""

    alpha0: float
    alpha: tuple = ()
    beta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "alpha", tuple(float(a) for a in np.atleast_1d(self.alpha)))
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        check_theta(self.as_vector(), self.order)

    @property
    def order(self) -> ModelOrder:
        return ModelOrder(len(self.alpha), len(self.beta))

    def as_vector(self) -> np.ndarray:
        return np.array((self.alpha0,) + self.alpha + self.beta, dtype=float)

    @classmethod
    def from_vector(cls, theta: Sequence[float], order: ModelOrder) -> "IngarchParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (order.n_theta,):
            raise AlignmentError(
                f"theta has {theta.size} entries, order {order} needs {order.n_theta}")
        return cls(theta[0], tuple(theta[1:1 + order.p]), tuple(theta[1 + order.p:]))


def check_theta(theta: np.ndarray, order: ModelOrder) -> None:
    """Raise ConstraintError unless ``theta`` is an admissible coefficient vector."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (order.n_theta,):
        raise AlignmentError(
            f"theta has {theta.size} entries, order {order} needs {order.n_theta}")
    if not np.all(np.isfinite(theta)):
        raise ConstraintError("coefficients must be finite")
    if theta[0] <= 0:
        raise ConstraintError(f"alpha0 must be > 0, got {theta[0]}")
    lags = theta[1:]
    if np.any(lags < 0):
        raise ConstraintError("alpha_i and beta_j must be >= 0")
    if lags.sum() >= 1:
        raise ConstraintError(
            f"sum(alpha) + sum(beta) must be < 1, got {lags.sum():.6g}")


@dataclass(frozen=True)
class CountSeries:
    """Observed counts with an optional aligned exogenous series."""

    counts: np.ndarray
    exog: Optional[np.ndarray] = None

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.ndim != 1:
            raise AlignmentError("counts must be one-dimensional")
        if raw.size and not np.all(np.isfinite(raw.astype(float))):
            raise ConstraintError("counts must be finite")
        counts = raw.astype(np.int64)
        if raw.size and np.any(counts != raw):
            raise ConstraintError("counts must be integers")
        if np.any(counts < 0):
            raise ConstraintError("counts must be nonnegative")
        object.__setattr__(self, "counts", _frozen(counts))
        if self.exog is not None:
            exog = np.array(self.exog, dtype=float)
            if exog.shape != counts.shape:
                raise AlignmentError(
                    f"exog has length {exog.size}, counts have {counts.size}")
            object.__setattr__(self, "exog", _frozen(exog))

    def __len__(self):
        return self.counts.size

    @property
    def n(self) -> int:
        return self.counts.size


def _lagged(x: np.ndarray, lag: int) -> np.ndarray:
    """``x_{t-lag}`` aligned with ``x_t``, zero before the sample starts."""
    out = np.zeros_like(x, dtype=float)
    if lag < x.size:
        out[lag:] = x[:x.size - lag]
    return out


def _denominator(beta: np.ndarray) -> np.ndarray:
    return np.concatenate(([1.0], -np.asarray(beta, dtype=float)))


def lambda_from_theta(theta: np.ndarray, counts: np.ndarray, order: ModelOrder) -> np.ndarray:
    """Unchecked recursion on a raw coefficient vector (used inside the fitters)."""
    p = order.p
    drive = np.full(counts.size, theta[0])
    for i in range(1, p + 1):
        drive += theta[i] * _lagged(counts, i)
    if order.q == 0:
        return drive
    return lfilter([1.0], _denominator(theta[1 + p:]), drive)


def lambda_jacobian_from_theta(theta: np.ndarray, counts: np.ndarray, lam: np.ndarray,
                               order: ModelOrder) -> np.ndarray:
    """Unchecked ``d lambda_t / d theta_j`` as an ``(N, 1 + p + q)`` array."""
    p, q = order.p, order.q
    n = counts.size
    cols = [np.ones(n)]
    cols += [_lagged(counts, i) for i in range(1, p + 1)]
    cols += [_lagged(lam, j) for j in range(1, q + 1)]
    jac = np.column_stack(cols)
    if q:
        jac = lfilter([1.0], _denominator(theta[1 + p:]), jac, axis=0)
    return jac


def _resolve_order(params: IngarchParams, order: Optional[ModelOrder]) -> ModelOrder:
    if order is None:
        return params.order
    if order != params.order:
        raise AlignmentError(f"params have order {params.order}, expected {order}")
    return order


def lambda_path(params: IngarchParams, series: CountSeries,
                order: Optional[ModelOrder] = None) -> np.ndarray:
    """Conditional means ``lambda_1..lambda_N`` for ``series``.

    Pre-sample counts and means are zero, so ``lambda_1 == alpha0``.
    """
    order = _resolve_order(params, order)
    if series.n == 0:
        raise EmptyInputError("series is empty")
    lam = lambda_from_theta(params.as_vector(), series.counts, order)
    return _frozen(lam)


def lambda_gradient(params: IngarchParams, series: CountSeries, path: np.ndarray,
                    order: Optional[ModelOrder] = None) -> np.ndarray:
    """Per-t derivatives of ``lambda_t`` with respect to each coefficient.

    Returns an ``(N, 1 + p + q)`` array whose columns follow the flattened
    coefficient layout. Pre-sample derivatives are zero.
    """
    order = _resolve_order(params, order)
    path = np.asarray(path, dtype=float)
    if path.shape != series.counts.shape:
        raise AlignmentError(
            f"path has length {path.size}, series has {series.n}")
    return lambda_jacobian_from_theta(params.as_vector(), series.counts, path, order)
