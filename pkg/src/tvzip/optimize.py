"""Damped, bound-aware Newton-Raphson maximisation.

The Hessian is taken by central differences of an analytic gradient. When
it is not negative definite a multiple of the identity is subtracted,
escalating tenfold from ``1e-8``. Proposals are made feasible by clipping to
the box bounds, then by halving the step (at most 50 times) against the
remaining constraints, and finally by the caller's projection. The damped
step is then backtracked until the objective does not decrease.

Coordinates sitting on a box bound whose gradient points outward are held
fixed for that iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .errors import NumericalError, OptimizationError

MAX_HALVINGS = 50
MU_START = 1e-8
MU_MAX = 1e20
ACTIVE_TOL = 1e-9


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def relative_change_small(old, new, tol: float = 1e-6, floor: float = 1e-8) -> bool:
    """Per-coordinate stopping rule ``|(new - old) / old| <= tol``.

    Coordinates with ``|old| < floor`` use the absolute change instead.
    """
    old = np.asarray(old, dtype=float)
    diff = np.abs(np.asarray(new, dtype=float) - old)
    scale = np.where(np.abs(old) < floor, 1.0, np.abs(old))
    return bool(np.all(diff <= tol * scale))


def fd_hessian(grad: Callable, x: np.ndarray, active: np.ndarray, lower=None, upper=None,
               rel_step: float = 1e-5) -> np.ndarray:
    """Symmetrised difference Jacobian of ``grad`` over the ``active`` coordinates."""
    idx = np.flatnonzero(active)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    H = np.empty((idx.size, idx.size))
    g0 = None
    for col, k in enumerate(idx):
        h = rel_step * max(1.0, abs(x[k]))
        up, down = x.copy(), x.copy()
        up[k] += h
        down[k] -= h
        if down[k] >= lower[k] and up[k] <= upper[k]:
            d = (grad(up) - grad(down)) / (2.0 * h)
        else:
            if g0 is None:
                g0 = grad(x)
            if up[k] <= upper[k]:
                d = (grad(up) - g0) / h
            else:
                d = (g0 - grad(down)) / h
        H[:, col] = d[idx]
    H = 0.5 * (H + H.T)
    if not np.all(np.isfinite(H)):
        raise NumericalError("non-finite Hessian entries")
    return H


def newton_direction(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Solve ``(mu I - H) d = g`` with the smallest ``mu`` that makes it definite.

    ``mu = 0`` is tried first.
    """
    n = g.size
    mu = 0.0
    while True:
        try:
            L = np.linalg.cholesky(mu * np.eye(n) - H)
        except np.linalg.LinAlgError:
            mu = MU_START if mu == 0.0 else mu * 10.0
            if mu > MU_MAX:
                raise OptimizationError("Hessian could not be regularised") from None
            continue
        y = np.linalg.solve(L, g)
        d = np.linalg.solve(L.T, y)
        if np.all(np.isfinite(d)):
            return d
        mu = MU_START if mu == 0.0 else mu * 10.0
        if mu > MU_MAX:
            raise OptimizationError("Newton system could not be solved")


def _tangent_direction(g, H, d, x, active, constraints):
    """Re-solve the Newton system inside the tangent space of blocking constraints.

    A constraint blocks when it is active at ``x`` and ``d`` points outward.
    """
    idx = np.flatnonzero(active)
    blocking = []
    for _ in range(len(constraints)):
        added = False
        for k, con in enumerate(constraints):
            if k in blocking:
                continue
            value, normal = con(x)
            if value >= -ACTIVE_TOL and normal @ d > 0:
                blocking.append(k)
                added = True
        if not added:
            break
        normals = np.array([constraints[k](x)[1][idx] for k in blocking])
        Z = null_space(normals)
        d = np.zeros_like(x)
        if Z.shape[1] == 0:
            return d
        d[idx] = Z @ newton_direction(Z.T @ g[idx], Z.T @ H @ Z)
    return d


def newton_maximize(fun: Callable, grad: Callable, x0, *, free=None, lower=None, upper=None,
                    feasible: Optional[Callable] = None, project: Optional[Callable] = None,
                    constraints: Sequence[Callable] = (), hess: Optional[Callable] = None,
                    tol: float = 1e-6, max_iter: int = 200) -> NewtonResult:
    """Maximise ``fun`` from ``x0``.

    ``constraints`` are callables returning ``(c(x), grad c(x))`` for smooth
    constraints ``c(x) <= 0`` that ``feasible`` also enforces; when one is
    active and the Newton step would leave through it, the step is taken in
    its tangent space instead. The stopping rule is applied to the full
    Newton step.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    free = np.ones(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    feasible = feasible or (lambda z: True)
    project = project or (lambda z: z)
    if hess is None:
        def hess(z, active):
            return fd_hessian(grad, z, active, lower, upper)

    def improves(value):
        return np.isfinite(value) and value >= f

    f = fun(x)
    if not np.isfinite(f):
        raise NumericalError("objective is not finite at the starting point")
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        g = grad(x)
        held = ((x <= lower) & (g < 0)) | ((x >= upper) & (g > 0))
        active = free & ~held
        if not active.any():
            converged = True
            break
        H = hess(x, active)
        d = np.zeros(n)
        d[active] = newton_direction(g[active], H)
        if constraints:
            d = _tangent_direction(g, H, d, x, active, constraints)
        full = np.clip(x + d, lower, upper)
        small = relative_change_small(x, full, tol)

        step = 1.0
        candidates = []
        for _ in range(MAX_HALVINGS):
            cand = np.clip(x + step * d, lower, upper)
            if feasible(cand):
                candidates.append(cand)
                break
            step *= 0.5
        if step < 1.0 or not candidates:
            candidates.append(project(full))
        scored = [(fun(c), k, c) for k, c in enumerate(candidates)]
        scored = [sc for sc in scored if np.isfinite(sc[0])]
        fc, cand = (max(scored, key=lambda sc: (sc[0], -sc[1]))[::2] if scored
                    else (-np.inf, x))
        tries = 0
        while not improves(fc) and tries < MAX_HALVINGS:
            step *= 0.5
            cand = np.clip(x + step * d, lower, upper)
            if not feasible(cand):
                cand = project(cand)
            fc = fun(cand)
            tries += 1
        if not improves(fc):
            converged = small
            break
        x, f = cand, fc
        if small:
            converged = True
            break
    return NewtonResult(x, float(f), it, converged)
