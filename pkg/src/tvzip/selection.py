"""Information criteria, the MADE accuracy metric, and model comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInputError, IncomparableFitsError


def made(estimates, truth: float) -> float:
    """Mean absolute deviation of replicated estimates from the true value."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise EmptyInputError("no estimates")
    return float(np.mean(np.abs(est - truth)))


def aic_bic(loglik: float, n_effective: int, k: int) -> tuple[float, float]:
    """``(-2 l + 2 k, -2 l + k log n)``."""
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + k * math.log(n_effective)


def information_criteria(fit, n_effective: Optional[float] = None,
                         k: Optional[int] = None) -> tuple[float, float]:
    """AIC and BIC of a fit; defaults to its own ``N - p`` and estimated-parameter count."""
    n_effective = fit.n_effective if n_effective is None else n_effective
    k = fit.k if k is None else k
    return aic_bic(fit.loglik, n_effective, k)


@dataclass(frozen=True)
class Ranked:
    rank: int
    label: str
    fit: object
    aic: float
    bic: float

    @property
    def k(self) -> int:
        return self.fit.k


def compare_models(fits: Sequence, labels: Optional[Sequence[str]] = None) -> list[Ranked]:
    """Rank fits of the same series by AIC, then BIC, then parameter count."""
    fits = list(fits)
    if not fits:
        raise EmptyInputError("no fits to compare")
    if labels is None:
        labels = [f"{f.link.family}({f.order})" for f in fits]
    if len(labels) != len(fits):
        raise ValueError("labels and fits differ in length")
    digests = {f.data_digest for f in fits}
    if len(digests) > 1:
        raise IncomparableFitsError("fits were made on different data series")
    keyed = [(f.aic, f.bic, f.k, i) for i, f in enumerate(fits)]
    order = sorted(range(len(fits)), key=lambda i: keyed[i])
    return [Ranked(rank + 1, labels[i], fits[i], fits[i].aic, fits[i].bic)
            for rank, i in enumerate(order)]


_COLUMNS = ["omega", "A", "B", "delta0", "delta1"]


def format_comparison(ranked: Sequence[Ranked]) -> str:
    """Aligned table: one row per candidate with estimates, AIC and BIC."""
    max_p = max(r.fit.order.p for r in ranked)
    max_q = max(r.fit.order.q for r in ranked)
    used = [c for c in _COLUMNS if any(c in r.fit.names for r in ranked)]
    cols = used + ["alpha0"] + [f"alpha{i}" for i in range(1, max_p + 1)] \
        + [f"beta{j}" for j in range(1, max_q + 1)]
    header = ["rank", "model"] + cols + ["k", "loglik", "AIC", "BIC"]
    rows = []
    for r in ranked:
        est = r.fit.estimates
        row = [str(r.rank), r.label]
        row += [f"{est[c]:.4f}" if c in est else "" for c in cols]
        row += [str(r.k), f"{r.fit.loglik:.4f}", f"{r.aic:.4f}", f"{r.bic:.4f}"]
        rows.append(row)
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) if i < 2 else h.rjust(w)
                       for i, (h, w) in enumerate(zip(header, widths)))]
    for row in rows:
        lines.append("  ".join(v.ljust(w) if i < 2 else v.rjust(w)
                               for i, (v, w) in enumerate(zip(row, widths))))
    return "\n".join(lines) + "\n"
