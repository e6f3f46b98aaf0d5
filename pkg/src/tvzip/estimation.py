"""Likelihoods, scores and the EM / direct maximum-likelihood fitters.

The composite parameter vector is ``phi = (gamma, theta)``: the link's
estimable parameters first (``omega``; ``A, B``; or ``delta0, delta1``)
followed by ``(alpha0, alpha_1..alpha_p, beta_1..beta_q)``. Every likelihood
sums over ``t = p + 1..N``; the conditional means are still run from
``t = 1`` with zero pre-sample values.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import gammaln, logit

from . import optimize
from .core import (PERSISTENCE_CAP, CountSeries, ModelOrder, check_theta,
                   lambda_from_theta, lambda_jacobian_from_theta)
from .errors import (AlignmentError, ConstraintError, EmptyInputError, MembershipError,
                     MissingCovariateError)
from .links import ConstantLink, Link, LogisticLink, SinusoidalLink

EM_MAX_ITER = 500
NEWTON_MAX_ITER = 200
TOL = 1e-6
# Inner Newton runs tighter than the outer EM stopping rule.
M_STEP_TOL = 1e-8
ALPHA0_FLOOR = 1e-8
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class ParamVector:
    """Link parameters ``gamma`` and INGARCH coefficients ``theta``."""

    gamma: tuple
    theta: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(v) for v in self.gamma))
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))

    @property
    def flat(self) -> np.ndarray:
        return np.array(self.gamma + self.theta, dtype=float)

    @classmethod
    def from_flat(cls, values, n_gamma: int) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        return cls(tuple(values[:n_gamma]), tuple(values[n_gamma:]))

    def __len__(self):
        return len(self.gamma) + len(self.theta)


def param_names(link: Link, order: ModelOrder) -> list[str]:
    return list(link.param_names) + order.theta_names()


@dataclass(frozen=True)
class Responsibilities:
    """Posterior probability that each observation is a structural zero."""

    tau: np.ndarray

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True)
class FitResult:
    phi_hat: ParamVector
    loglik: float
    iterations: int
    converged: bool
    aic: float
    bic: float
    fitted_lambda: np.ndarray
    fitted_omega: np.ndarray
    method: str
    names: tuple
    free: tuple
    link: Link
    order: ModelOrder
    n_effective: int
    loglik_trace: tuple = ()
    at_boundary: tuple = ()
    data_digest: str = field(default="", repr=False)

    @property
    def k(self) -> int:
        """Number of estimated coordinates."""
        return len(self.free)

    @property
    def estimates(self) -> dict:
        return dict(zip(self.names, self.phi_hat.flat.tolist()))

    def as_record(self) -> dict:
        record = {
            "method": self.method,
            "link": self.link.spec(),
            "order": str(self.order),
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "k": self.k,
            "n_effective": self.n_effective,
            "iterations": self.iterations,
            "converged": self.converged,
            "at_boundary": ",".join(self.at_boundary),
        }
        for name, value in self.estimates.items():
            record[name] = value
        return record


def data_digest(data: CountSeries) -> str:
    h = hashlib.sha1(np.ascontiguousarray(data.counts).tobytes())
    if data.exog is not None:
        h.update(np.ascontiguousarray(data.exog).tobytes())
    return h.hexdigest()


class _Problem:
    """A data set bound to a link template and model order."""

    def __init__(self, data: CountSeries, link: Link, order: ModelOrder):
        if data.n == 0:
            raise EmptyInputError("series is empty")
        if data.n <= order.p:
            raise EmptyInputError(f"need more than p = {order.p} observations, got {data.n}")
        if link.needs_exog and data.exog is None:
            raise MissingCovariateError(f"{link.family} link requires an exogenous series")
        self.data, self.link, self.order = data, link, order
        self.counts = data.counts
        self.t = np.arange(1, data.n + 1, dtype=float)
        self.exog = data.exog
        self.r = len(link.param_names)
        self.dim = self.r + order.n_theta
        sl = slice(order.p, data.n)
        self.sl = sl
        x = self.counts[sl].astype(float)
        self.x = x
        self.zero = x == 0
        self.log_fact = gammaln(x + 1.0)
        self.n_eff = x.size
        self._lam_jac = None
        if order.q == 0:
            self._lam_jac = lambda_jacobian_from_theta(
                np.ones(order.n_theta), self.counts, None, order)[sl]

    # bounds and feasibility on the flat vector
    def lower(self) -> np.ndarray:
        lo = np.zeros(self.dim)
        lo[:self.r] = self.link.lower_bounds()
        lo[self.r] = ALPHA0_FLOOR
        return lo

    def upper(self) -> np.ndarray:
        up = np.full(self.dim, np.inf)
        up[:self.r] = self.link.upper_bounds()
        up[self.r + 1:] = PERSISTENCE_CAP
        return up

    def feasible(self, phi) -> bool:
        gamma, theta = phi[:self.r], phi[self.r:]
        if not np.all(np.isfinite(phi)):
            return False
        if theta[0] < ALPHA0_FLOOR or np.any(theta[1:] < 0) or theta[1:].sum() > PERSISTENCE_CAP + FEAS_TOL:
            return False
        return self.link.is_feasible(gamma)

    def project(self, phi) -> np.ndarray:
        phi = np.clip(np.asarray(phi, dtype=float), self.lower(), self.upper())
        lags = phi[self.r + 1:]
        total = lags.sum()
        if total > PERSISTENCE_CAP:
            phi[self.r + 1:] = lags * (PERSISTENCE_CAP / total)
        phi[:self.r] = self.link.project(phi[:self.r])
        return phi

    def constraints(self) -> list:
        """Smooth inequality constraints ``c(phi) <= 0`` with their gradients."""
        cons = []
        if self.order.n_theta > 1:
            normal = np.zeros(self.dim)
            normal[self.r + 1:] = 1.0

            def persistence(phi):
                return phi[self.r + 1:].sum() - PERSISTENCE_CAP, normal
            cons.append(persistence)
        if isinstance(self.link, SinusoidalLink):
            bound = self.link.radius_bound()

            def disk(phi):
                r = math.hypot(phi[0], phi[1])
                normal = np.zeros(self.dim)
                if r > 0:
                    normal[:2] = phi[:2] / r
                return r - bound, normal
            cons.append(disk)
        return cons

    def check(self, phi) -> None:
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (self.dim,):
            raise AlignmentError(f"parameter vector has {phi.size} entries, expected {self.dim}")
        check_theta(phi[self.r:], self.order)
        if not self.link.is_feasible(phi[:self.r]):
            raise ConstraintError(f"link parameters {phi[:self.r]} are infeasible")
        if isinstance(self.link, ConstantLink) and not 0 < phi[0] < 1:
            raise ConstraintError("omega must lie in (0, 1)")

    # model paths
    def lam_full(self, phi) -> np.ndarray:
        return lambda_from_theta(phi[self.r:], self.counts, self.order)

    def omega_full(self, phi) -> np.ndarray:
        return self.link.omega_from(phi[:self.r], self.t, self.exog)

    def paths(self, phi):
        return self.lam_full(phi)[self.sl], self.omega_full(phi)[self.sl]

    def _jacobians(self, phi, lam_full):
        if self._lam_jac is not None:
            jl = self._lam_jac
        else:
            jl = lambda_jacobian_from_theta(phi[self.r:], self.counts, lam_full, self.order)[self.sl]
        jw = self.link.jacobian_from(phi[:self.r], self.t, self.exog)[self.sl]
        return jl, jw

    # observed-data likelihood
    def loglik_terms(self, phi) -> np.ndarray:
        lam, om = self.paths(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            p0 = om + (1.0 - om) * np.exp(-lam)
            pos = np.log1p(-om) + self.x * np.log(lam) - lam - self.log_fact
            return np.where(self.zero, np.log(p0), pos)

    def loglik(self, phi) -> float:
        return float(self.loglik_terms(phi).sum())

    def score(self, phi) -> np.ndarray:
        lam_full = self.lam_full(phi)
        lam, om = lam_full[self.sl], self.omega_full(phi)[self.sl]
        e = np.exp(-lam)
        p0 = om + (1.0 - om) * e
        d_om = np.where(self.zero, (1.0 - e) / p0, -1.0 / (1.0 - om))
        d_lam = np.where(self.zero, -(1.0 - om) * e / p0, self.x / lam - 1.0)
        jl, jw = self._jacobians(phi, lam_full)
        return np.concatenate([d_om @ jw, d_lam @ jl])

    # complete-data surrogate
    def q_value(self, phi, tau) -> float:
        lam, om = self.paths(phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            pois = np.log1p(-om) + self.x * np.log(lam) - lam - self.log_fact
            struct = np.where(tau > 0, tau * np.log(om), 0.0)
            return float((struct + (1.0 - tau) * pois).sum())

    def q_score(self, phi, tau) -> np.ndarray:
        lam_full = self.lam_full(phi)
        lam, om = lam_full[self.sl], self.omega_full(phi)[self.sl]
        d_om = tau / om - (1.0 - tau) / (1.0 - om)
        d_lam = (1.0 - tau) * (self.x / lam - 1.0)
        jl, jw = self._jacobians(phi, lam_full)
        return np.concatenate([d_om @ jw, d_lam @ jl])

    def responsibilities(self, phi) -> np.ndarray:
        lam = self.lam_full(phi)
        om = self.omega_full(phi)
        zero = self.counts == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = om / (om + (1.0 - om) * np.exp(-lam))
        return np.where(zero, tau, 0.0)


def _flat(phi) -> np.ndarray:
    return phi.flat if isinstance(phi, ParamVector) else np.asarray(phi, dtype=float)


def _free_mask(problem: _Problem, free) -> np.ndarray:
    names = param_names(problem.link, problem.order)
    if free is None:
        return np.ones(problem.dim, dtype=bool)
    free = set(free)
    unknown = free - set(names)
    if unknown:
        raise ConstraintError(f"unknown parameter names {sorted(unknown)}; have {names}")
    return np.array([n in free for n in names])


def log_likelihood(phi, data: CountSeries, link: Link, order: ModelOrder) -> float:
    """Observed-data conditional log-likelihood over ``t = p + 1..N``."""
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    return prob.loglik(x)


def complete_data_log_likelihood(phi, z, data: CountSeries, link: Link,
                                 order: ModelOrder) -> float:
    """Log-likelihood with zero-membership weights ``z`` (hard or soft)."""
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    z = np.asarray(z.tau if isinstance(z, Responsibilities) else z, dtype=float)
    if z.shape != data.counts.shape:
        raise AlignmentError(f"z has length {z.size}, series has {data.n}")
    if np.any((z < 0) | (z > 1)):
        raise MembershipError("membership values must lie in [0, 1]")
    if np.any((z > 0) & (data.counts > 0)):
        bad = int(np.flatnonzero((z > 0) & (data.counts > 0))[0]) + 1
        raise MembershipError(f"z_t > 0 at t = {bad} where the count is positive")
    return prob.q_value(x, z[prob.sl])


def score(phi, data: CountSeries, link: Link, order: ModelOrder) -> np.ndarray:
    """Analytic gradient of the observed log-likelihood, in ``phi`` order."""
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    return prob.score(x)


def hessian(phi, data: CountSeries, link: Link, order: ModelOrder, free=None) -> np.ndarray:
    """Difference Hessian of the observed log-likelihood over the ``free`` coordinates."""
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    return optimize.fd_hessian(prob.score, x, _free_mask(prob, free), prob.lower(), prob.upper())


def e_step(phi, data: CountSeries, link: Link, order: ModelOrder) -> Responsibilities:
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    return Responsibilities(prob.responsibilities(x))


def m_step(phi, tau: Responsibilities, data: CountSeries, link: Link, order: ModelOrder,
           free=None, max_iter: int = NEWTON_MAX_ITER, tol: float = TOL) -> ParamVector:
    """Maximise the complete-data surrogate with responsibilities ``tau``.

    ``max_iter=1`` gives the single-step (generalised EM) variant.
    """
    prob = _Problem(data, link, order)
    x = _flat(phi)
    prob.check(x)
    t = np.asarray(tau.tau if isinstance(tau, Responsibilities) else tau, dtype=float)
    if np.any((t > 0) & (data.counts > 0)):
        raise MembershipError("responsibilities must vanish where the count is positive")
    res = _maximize_q(prob, x, t[prob.sl], _free_mask(prob, free), max_iter, tol)
    return ParamVector.from_flat(res.x, prob.r)


def _maximize_q(prob, x, tau, free, max_iter, tol):
    return optimize.newton_maximize(
        lambda z: prob.q_value(z, tau), lambda z: prob.q_score(z, tau), x,
        free=free, lower=prob.lower(), upper=prob.upper(),
        feasible=prob.feasible, project=prob.project, constraints=prob.constraints(), tol=tol, max_iter=max_iter)


def excess_zero_fraction(counts: np.ndarray) -> float:
    """Share of zeros beyond what a Poisson with the sample mean would give."""
    counts = np.asarray(counts, dtype=float)
    mean = counts.mean()
    f0 = float(np.mean(counts == 0))
    if mean <= 0:
        return 1.0
    pz = math.exp(-mean)
    return max(0.0, (f0 - pz) / (1.0 - pz))


def default_init(data: CountSeries, link: Link, order: ModelOrder) -> ParamVector:
    """Moment-based starting point.

    ``alpha0 = mean * (1 - z)``, ``alpha_i = 0.1 / p``, ``beta_j = 0.1 / q``
    where ``z`` is the excess-zero fraction; the link starts at a roughly
    constant zero probability ``z``. Sinusoidal links tie their offset to the
    amplitude, so their start searches a small grid of phases and radii.
    Link parameters already set on ``link`` override the defaults.
    """
    counts = data.counts
    z = min(max(excess_zero_fraction(counts), 0.01), 0.99)
    theta = [max(float(counts.mean()) * (1.0 - z), 1e-3)]
    theta += [0.1 / order.p] * order.p
    if order.q:
        theta += [0.1 / order.q] * order.q
    theta = np.array(theta)

    if isinstance(link, ConstantLink):
        gamma = np.array([z])
    elif isinstance(link, LogisticLink):
        gamma = np.array([float(logit(z)), 0.0])
    elif isinstance(link, SinusoidalLink):
        gamma = _sinusoid_start(data, link, order, theta, z)
    else:
        raise ConstraintError(f"no default start for {type(link).__name__}")

    known = np.array([v is not None for v in link.params])
    if known.any():
        gamma = np.where(known, [v if v is not None else 0.0 for v in link.params], gamma)
    if isinstance(link, SinusoidalLink):
        gamma = link.project(gamma)
    return ParamVector(tuple(gamma), tuple(theta))


def _sinusoid_start(data, link, order, theta, z):
    prob = _Problem(data, link, order)
    bound = link.radius_bound() - 1e-6
    base = min(max(z - link.delta, 0.02), bound)
    best, best_ll = None, -np.inf
    for scale in (0.5, 1.0, 1.5):
        radius = min(base * scale, bound)
        for k in range(12):
            angle = 2.0 * np.pi * k / 12
            gamma = radius * np.array([math.cos(angle), math.sin(angle)])
            ll = prob.loglik(np.concatenate([gamma, theta]))
            if ll > best_ll:
                best, best_ll = gamma, ll
    return best


def _resolve_start(prob: _Problem, data, link, order, init, fixed):
    names = param_names(link, order)
    fixed = set(fixed or ())
    unknown = fixed - set(names)
    if unknown:
        raise ConstraintError(f"cannot fix unknown parameters {sorted(unknown)}")
    missing = [n for n in link.unknown if n in fixed]
    if missing and init is None:
        raise ConstraintError(f"fixed parameters {missing} need values")
    if init is None:
        start = default_init(data, link, order).flat
    else:
        start = _flat(init).copy()
        if start.shape != (prob.dim,):
            raise AlignmentError(f"init has {start.size} entries, expected {prob.dim}")
    if not prob.feasible(start):
        start = prob.project(start)
    free = np.array([n not in fixed for n in names])
    return start, free, names


def _boundary_names(prob: _Problem, x, free, names) -> tuple:
    lo, up = prob.lower(), prob.upper()
    hits = []
    for k, name in enumerate(names):
        if not free[k]:
            continue
        if x[k] <= lo[k] or x[k] >= up[k]:
            hits.append(name)
    if isinstance(prob.link, SinusoidalLink):
        r = math.hypot(x[0], x[1])
        if r >= prob.link.radius_bound() - 1e-9 and (free[0] or free[1]):
            hits.append("radius")
    if x[prob.r + 1:].sum() >= PERSISTENCE_CAP - 1e-12 and prob.order.n_theta > 1:
        hits.append("persistence")
    return tuple(hits)


def _result(prob, x, free, names, method, iterations, converged, trace) -> FitResult:
    from .selection import aic_bic

    # Iterates may sit a rounding error outside the disk; pull them back so the
    # fitted link can be constructed.
    x = np.array(x, dtype=float)
    x[:prob.r] = prob.link.project(x[:prob.r])
    ll = prob.loglik(x)
    k = int(free.sum())
    aic, bic = aic_bic(ll, prob.n_eff, k)
    lam = prob.lam_full(x)
    om = prob.omega_full(x)
    lam.setflags(write=False)
    om.setflags(write=False)
    fitted_link = prob.link.with_params(x[:prob.r])
    return FitResult(
        phi_hat=ParamVector.from_flat(x, prob.r), loglik=ll, iterations=iterations,
        converged=bool(converged), aic=aic, bic=bic, fitted_lambda=lam, fitted_omega=om,
        method=method, names=tuple(names),
        free=tuple(n for n, f in zip(names, free) if f), link=fitted_link,
        order=prob.order, n_effective=prob.n_eff, loglik_trace=tuple(trace),
        at_boundary=_boundary_names(prob, x, free, names), data_digest=data_digest(prob.data))


def fit_em(data: CountSeries, link: Link, order: ModelOrder, init=None,
           fixed: Iterable[str] = (), tol: float = TOL, max_iter: int = EM_MAX_ITER,
           m_step_iter: int = NEWTON_MAX_ITER) -> FitResult:
    """Expectation-maximisation fit.

    Each sweep computes the responsibilities and then maximises the
    complete-data surrogate by Newton-Raphson (``m_step_iter=1`` runs a single
    Newton step instead). Stops when every estimated coordinate changes by at
    most ``tol`` relative to its previous value. Hitting ``max_iter`` returns a
    result with ``converged=False``.
    """
    prob = _Problem(data, link, order)
    x, free, names = _resolve_start(prob, data, link, order, init, fixed)
    trace = [prob.loglik(x)]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        tau = prob.responsibilities(x)[prob.sl]
        res = _maximize_q(prob, x, tau, free, m_step_iter, M_STEP_TOL)
        new = res.x
        trace.append(prob.loglik(new))
        done = optimize.relative_change_small(x, new, tol)
        x = new
        if done:
            converged = True
            break
    return _result(prob, x, free, names, "EM", it, converged, trace)


def fit_mle(data: CountSeries, link: Link, order: ModelOrder, init=None,
            fixed: Iterable[str] = (), tol: float = TOL,
            max_iter: int = NEWTON_MAX_ITER) -> FitResult:
    """Direct maximisation of the observed log-likelihood by damped Newton-Raphson."""
    prob = _Problem(data, link, order)
    x, free, names = _resolve_start(prob, data, link, order, init, fixed)
    res = optimize.newton_maximize(
        prob.loglik, prob.score, x, free=free, lower=prob.lower(), upper=prob.upper(),
        feasible=prob.feasible, project=prob.project, constraints=prob.constraints(), tol=tol, max_iter=max_iter)
    return _result(prob, res.x, free, names, "MLE", res.iterations, res.converged,
                   (prob.loglik(x), res.fun))


def fit(data: CountSeries, link: Link, order: ModelOrder, method: str = "em", **kwargs):
    method = method.lower()
    if method == "em":
        return fit_em(data, link, order, **kwargs)
    if method == "mle":
        return fit_mle(data, link, order, **kwargs)
    raise ValueError(f"unknown method {method!r}; expected 'em' or 'mle'")
