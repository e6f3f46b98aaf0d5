"""Zero-inflation link families ``omega_t = g(V_t, gamma)``.

Four families are available:

``ConstantLink``
    a single probability ``omega``.
``SinusoidalLink``
    ``A sin(2 pi t / s) + B cos(2 pi t / s) + C`` with the offset tied to the
    amplitude, ``C = sqrt(A^2 + B^2) + delta``, so the trough of the wave sits
    exactly at ``delta`` and the crest at ``2 sqrt(A^2 + B^2) + delta``.
``PiecewiseMonthlyLink``
    the sinusoid evaluated at a month index ``m(t)`` instead of the week ``t``.
``LogisticLink``
    ``1 / (1 + exp(-(d0 + d1 V_t)))`` on an exogenous series ``V_t``.

Only the amplitude pair ``(A, B)`` or the logistic pair ``(d0, d1)`` is
estimated; ``delta``, the period ``s`` and any week-to-month map are fixed
structural constants. An estimable parameter set to ``None`` is unknown and
must be supplied (or estimated) before the link can be evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import expit

from .errors import ConstraintError, MissingCovariateError

OMEGA_FLOOR = 1e-8
# Radial margin used when projecting (A, B) back into the feasible disk.
DISK_MARGIN = 1e-12


class SinusoidalCheck(NamedTuple):
    feasible: bool
    C: Optional[float]
    violated: Optional[str]


def validate_sinusoidal(A: float, B: float, delta: float) -> SinusoidalCheck:
    """Check the amplitude bounds and derive the offset ``C``.

    Raises ConstraintError when ``delta`` is outside ``(0, 1/2)``; otherwise
    returns a verdict naming the first violated bound, if any.
    """
    if not 0.0 < delta < 0.5:
        raise ConstraintError(f"delta must lie in (0, 1/2), got {delta}")
    bound = 0.5 - delta
    radius = math.hypot(A, B)
    if abs(A) > bound:
        return SinusoidalCheck(False, None, f"|A| <= 1/2 - delta ({abs(A):.6g} > {bound:.6g})")
    if abs(B) > bound:
        return SinusoidalCheck(False, None, f"|B| <= 1/2 - delta ({abs(B):.6g} > {bound:.6g})")
    if radius > bound:
        return SinusoidalCheck(
            False, None, f"sqrt(A^2 + B^2) <= 1/2 - delta ({radius:.6g} > {bound:.6g})")
    return SinusoidalCheck(True, radius + delta, None)


def _as_time(t) -> np.ndarray:
    return np.asarray(t, dtype=float)


class Link:
    """Common machinery; subclasses define the family-specific pieces."""

    family: str = ""
    param_names: tuple = ()
    needs_exog = False

    @property
    def params(self) -> tuple:
        return tuple(getattr(self, name) for name in self.param_names)

    @property
    def unknown(self) -> tuple:
        return tuple(n for n in self.param_names if getattr(self, n) is None)

    def with_params(self, values: Sequence[float]) -> "Link":
        values = [float(v) for v in values]
        if len(values) != len(self.param_names):
            raise ConstraintError(
                f"{self.family} link takes {len(self.param_names)} parameters")
        return replace(self, **dict(zip(self.param_names, values)))

    def gamma(self) -> np.ndarray:
        if self.unknown:
            raise ConstraintError(f"link parameters {self.unknown} are unset")
        return np.array(self.params, dtype=float)

    # Unchecked vectorised evaluation on a raw parameter vector. ``t`` holds
    # time indexes starting at 1.
    def omega_from(self, gamma, t, exog=None) -> np.ndarray:
        raise NotImplementedError

    def jacobian_from(self, gamma, t, exog=None) -> np.ndarray:
        raise NotImplementedError

    def is_feasible(self, gamma) -> bool:
        return bool(np.all(np.isfinite(gamma)))

    def project(self, gamma) -> np.ndarray:
        return np.asarray(gamma, dtype=float)

    def lower_bounds(self) -> np.ndarray:
        return np.full(len(self.param_names), -np.inf)

    def upper_bounds(self) -> np.ndarray:
        return np.full(len(self.param_names), np.inf)

    def _exog(self, exog, t):
        if not self.needs_exog:
            return None
        if exog is None:
            raise MissingCovariateError(f"{self.family} link requires an exogenous value")
        return np.asarray(exog, dtype=float)

    def spec(self) -> str:
        """Render back to the ``family:key=value`` grammar."""
        parts = []
        for key, value in self._spec_items():
            parts.append(f"{key}={'auto' if value is None else _fmt(value)}")
        return f"{self.family}:" + ",".join(parts)

    def _spec_items(self):
        return [(n, getattr(self, n)) for n in self.param_names]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) or float(value).is_integer():
        return str(int(value)) if abs(float(value)) < 1e15 else repr(float(value))
    return repr(float(value))


@dataclass(frozen=True)
class ConstantLink(Link):
    omega: Optional[float] = None

    family = "constant"
    param_names = ("omega",)

    def __post_init__(self):
        if self.omega is not None and not 0.0 < self.omega < 1.0:
            raise ConstraintError(f"omega must lie in (0, 1), got {self.omega}")

    def omega_from(self, gamma, t, exog=None):
        return np.full(np.shape(t), float(gamma[0]))

    def jacobian_from(self, gamma, t, exog=None):
        return np.ones(np.shape(t) + (1,))

    def is_feasible(self, gamma):
        return bool(OMEGA_FLOOR <= gamma[0] <= 1.0 - OMEGA_FLOOR)

    def project(self, gamma):
        return np.clip(np.asarray(gamma, dtype=float), OMEGA_FLOOR, 1.0 - OMEGA_FLOOR)

    def lower_bounds(self):
        return np.array([OMEGA_FLOOR])

    def upper_bounds(self):
        return np.array([1.0 - OMEGA_FLOOR])


@dataclass(frozen=True)
class SinusoidalLink(Link):
    A: Optional[float] = None
    B: Optional[float] = None
    delta: float = 1e-4
    s: int = 12

    family = "sin"
    param_names = ("A", "B")

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ConstraintError(f"period s must be a positive integer, got {self.s}")
        object.__setattr__(self, "s", int(self.s))
        if not 0.0 < self.delta < 0.5:
            raise ConstraintError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.A is not None and self.B is not None:
            check = validate_sinusoidal(self.A, self.B, self.delta)
            if not check.feasible:
                raise ConstraintError(f"infeasible sinusoidal link: {check.violated}")

    @property
    def C(self) -> float:
        return math.hypot(self.A, self.B) + self.delta

    def _phase(self, t):
        return 2.0 * np.pi * _as_time(t) / self.s

    def omega_from(self, gamma, t, exog=None):
        a, b = float(gamma[0]), float(gamma[1])
        x = self._phase(t)
        return a * np.sin(x) + b * np.cos(x) + math.hypot(a, b) + self.delta

    def jacobian_from(self, gamma, t, exog=None):
        a, b = float(gamma[0]), float(gamma[1])
        x = self._phase(t)
        r = math.hypot(a, b)
        # C = r + delta moves with (A, B); at r = 0 the offset term is not
        # differentiable and contributes nothing.
        ca, cb = (a / r, b / r) if r > 0 else (0.0, 0.0)
        return np.stack([np.sin(x) + ca, np.cos(x) + cb], axis=-1)

    def harmonic_basis(self, t) -> np.ndarray:
        """``(sin(2 pi t / s), cos(2 pi t / s))``: the gradient when ``C`` is held fixed."""
        x = self._phase(t)
        return np.stack([np.sin(x), np.cos(x)], axis=-1)

    def radius_bound(self) -> float:
        return 0.5 - self.delta

    def is_feasible(self, gamma):
        return bool(math.hypot(gamma[0], gamma[1]) <= self.radius_bound() + 1e-12)

    def project(self, gamma):
        gamma = np.asarray(gamma, dtype=float).copy()
        r = math.hypot(gamma[0], gamma[1])
        limit = self.radius_bound() - DISK_MARGIN
        if r > limit:
            gamma *= limit / r
        return gamma

    def _spec_items(self):
        return super()._spec_items() + [("delta", self.delta), ("s", self.s)]


def default_month_index(t, weeks_per_year: int = 52, months: int = 12) -> np.ndarray:
    """Uniform week-to-month bucketing ``ceil(t * months / weeks_per_year)``."""
    t = np.asarray(t, dtype=float)
    return np.ceil(t * months / weeks_per_year - 1e-12)


@dataclass(frozen=True)
class PiecewiseMonthlyLink(SinusoidalLink):
    """Sinusoid over months, held constant across the weeks of each month.

    ``months`` optionally gives the month index of week ``t`` at position
    ``t - 1``; without it weeks are bucketed uniformly.
    """

    months: Optional[tuple] = None
    weeks_per_year: int = 52

    family = "sinmonthly"

    def __post_init__(self):
        super().__post_init__()
        if self.months is not None:
            object.__setattr__(self, "months", tuple(int(m) for m in self.months))

    def month_of(self, t) -> np.ndarray:
        t = np.asarray(t)
        if self.months is None:
            return default_month_index(t, self.weeks_per_year, self.s)
        idx = np.asarray(t, dtype=np.int64) - 1
        table = np.asarray(self.months, dtype=float)
        if np.any(idx < 0) or np.any(idx >= table.size):
            raise ConstraintError("time index outside the supplied week-to-month map")
        return table[idx]

    def omega_from(self, gamma, t, exog=None):
        return super().omega_from(gamma, self.month_of(t))

    def jacobian_from(self, gamma, t, exog=None):
        return super().jacobian_from(gamma, self.month_of(t))

    def harmonic_basis(self, t):
        return super().harmonic_basis(self.month_of(t))

    def _spec_items(self):
        items = super()._spec_items()
        if self.weeks_per_year != 52:
            items.append(("weeks", self.weeks_per_year))
        return items


@dataclass(frozen=True)
class LogisticLink(Link):
    delta0: Optional[float] = None
    delta1: Optional[float] = None

    family = "logistic"
    param_names = ("delta0", "delta1")
    needs_exog = True

    def __post_init__(self):
        for v in (self.delta0, self.delta1):
            if v is not None and not math.isfinite(v):
                raise ConstraintError("logistic coefficients must be finite")

    def omega_from(self, gamma, t, exog=None):
        v = self._exog(exog, t)
        return expit(gamma[0] + gamma[1] * v)

    def jacobian_from(self, gamma, t, exog=None):
        v = self._exog(exog, t)
        w = expit(gamma[0] + gamma[1] * v)
        slope = w * (1.0 - w)
        return np.stack([slope, slope * v], axis=-1)

    def _spec_items(self):
        return [("d0", self.delta0), ("d1", self.delta1)]


def omega_at(link: Link, t, exog_value=None):
    """Zero-inflation probability at time index ``t`` (scalar or array)."""
    gamma = link.gamma()
    if link.needs_exog and exog_value is None:
        raise MissingCovariateError(f"{link.family} link requires an exogenous value")
    out = link.omega_from(gamma, _as_time(t), exog_value)
    return float(out) if np.ndim(out) == 0 else out


def omega_gradient(link: Link, t, exog_value=None) -> np.ndarray:
    """``d omega_t / d gamma`` in the link's parameter order."""
    gamma = link.gamma()
    if link.needs_exog and exog_value is None:
        raise MissingCovariateError(f"{link.family} link requires an exogenous value")
    return link.jacobian_from(gamma, _as_time(t), exog_value)


# -- spec grammar ---------------------------------------------------------

_ALIASES = {
    "constant": {"omega": "omega"},
    "sin": {"A": "A", "B": "B", "delta": "delta", "s": "s"},
    "sinmonthly": {"A": "A", "B": "B", "delta": "delta", "s": "s", "weeks": "weeks_per_year"},
    "logistic": {"d0": "delta0", "d1": "delta1", "delta0": "delta0", "delta1": "delta1"},
}
_CLASSES = {
    "constant": ConstantLink,
    "sin": SinusoidalLink,
    "sinmonthly": PiecewiseMonthlyLink,
    "logistic": LogisticLink,
}
_STRUCTURAL_INT = {"s", "weeks_per_year"}


def parse_link(text: str, months: Optional[Sequence[int]] = None) -> Link:
    """Parse ``family:key=value,...`` into a link.

    Estimable parameters given as ``auto`` or left out come back as ``None``.

    >>> parse_link("sin:A=0.1,B=0.1,delta=0.0001,s=12").C  # doctest: +ELLIPSIS
    0.14152...
    """
    family, _, body = str(text).strip().partition(":")
    family = family.strip().lower()
    if family in ("sine", "sinusoidal"):
        family = "sin"
    if family not in _CLASSES:
        raise ConstraintError(
            f"unknown link family {family!r}; expected one of {sorted(_CLASSES)}")
    aliases = _ALIASES[family]
    kwargs = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, sep, raw = item.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or key not in aliases:
            raise ConstraintError(f"bad {family} link parameter {item!r}")
        name = aliases[key]
        if raw.lower() == "auto":
            if name not in _CLASSES[family].param_names:
                raise ConstraintError(f"{key} is a structural constant and cannot be 'auto'")
            kwargs[name] = None
            continue
        try:
            kwargs[name] = int(raw) if name in _STRUCTURAL_INT else float(raw)
        except ValueError:
            raise ConstraintError(f"bad value for {key}: {raw!r}") from None
    if months is not None:
        if family != "sinmonthly":
            raise ConstraintError("a week-to-month map only applies to sinmonthly links")
        kwargs["months"] = tuple(months)
    return _CLASSES[family](**kwargs)
