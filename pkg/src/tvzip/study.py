"""Monte-Carlo parameter-recovery studies.

Replication ``j = 1..m`` simulates with seed ``base_seed + j`` and fits
every requested estimator from the default starting point on that same
sample. Means and MADE are taken over converged replications only; failures
are counted, never raised.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import estimation
from .core import IngarchParams, ModelOrder
from .errors import ConstraintError, TVZIPError
from .estimation import ParamVector, param_names
from .links import Link, LogisticLink, SinusoidalLink
from .selection import made
from .simulation import SimulationSpec, simulate_seasonal_ar, simulate_tvzip

FAMILIES = {
    "INARCH1": ModelOrder(1, 0),
    "INARCH2": ModelOrder(2, 0),
    "INGARCH11": ModelOrder(1, 1),
}

# (gamma, theta) of the benchmark models; the letter picks the family.
SINUSOIDAL_MODELS = {
    "A1": ((0.10, 0.10), (1.00, 0.40)),
    "A2": ((-0.25, -0.25), (2.00, 0.50)),
    "A3": ((-0.35, -0.30), (1.00, 0.70)),
    "B1": ((0.10, 0.10), (1.00, 0.20, 0.20)),
    "B2": ((-0.25, -0.25), (2.00, 0.30, 0.20)),
    "B3": ((-0.35, -0.30), (1.00, 0.40, 0.30)),
    "C1": ((0.10, 0.10), (1.00, 0.20, 0.20)),
    "C2": ((-0.25, -0.25), (2.00, 0.30, 0.20)),
    "C3": ((-0.35, -0.30), (1.00, 0.40, 0.30)),
}
LOGISTIC_MODELS = {
    "A1": ((-2.00, 0.00), (1.00, 0.40)),
    "A2": ((-1.00, -1.00), (2.00, 0.50)),
    "A3": ((2.00, 1.00), (1.00, 0.70)),
    "B1": ((-2.00, 0.00), (1.00, 0.20, 0.20)),
    "B2": ((-1.00, -1.00), (2.00, 0.30, 0.20)),
    "B3": ((2.00, 1.00), (1.00, 0.40, 0.30)),
    "C1": ((-2.00, 0.00), (1.00, 0.20, 0.20)),
    "C2": ((-1.00, -1.00), (2.00, 0.30, 0.20)),
    "C3": ((2.00, 1.00), (1.00, 0.40, 0.30)),
}
_FAMILY_OF_LETTER = {"A": "INARCH1", "B": "INARCH2", "C": "INGARCH11"}

DEFAULT_M = 200
FULL_M = 1000


@dataclass(frozen=True)
class StudyConfig:
    family: str
    true_phi: ParamVector
    link: Link
    n: int
    m: int = DEFAULT_M
    base_seed: int = 42
    estimators: tuple = ("MLE", "EM")
    label: str = ""
    eta: float = 0.25
    exog_period: int = 12
    shared_exog: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConstraintError(f"unknown model family {self.family!r}")
        if self.m < 1:
            raise ConstraintError("m must be >= 1")
        est = tuple(e.upper() for e in self.estimators)
        if not est or any(e not in ("MLE", "EM") for e in est):
            raise ConstraintError(f"estimators must be MLE and/or EM, got {self.estimators}")
        object.__setattr__(self, "estimators", est)
        IngarchParams.from_vector(self.true_phi.theta, self.order)
        self.link.with_params(self.true_phi.gamma)

    @property
    def order(self) -> ModelOrder:
        return FAMILIES[self.family]

    @property
    def names(self) -> list[str]:
        return param_names(self.link, self.order)


def preset(model: str, link_family: str = "sin", n: int = 360, m: int = DEFAULT_M,
           base_seed: int = 42, estimators: Sequence[str] = ("MLE", "EM"),
           delta: float = 1e-4, s: int = 12, **kwargs) -> StudyConfig:
    """Configuration for one of the benchmark models A1..C3."""
    model = model.upper()
    link_family = link_family.lower()
    if link_family in ("sin", "sinusoidal"):
        table, link = SINUSOIDAL_MODELS, SinusoidalLink(delta=delta, s=s)
    elif link_family == "logistic":
        table, link = LOGISTIC_MODELS, LogisticLink()
    else:
        raise ConstraintError(f"unknown link family {link_family!r}")
    if model not in table:
        raise ConstraintError(f"unknown model {model!r}; expected one of {sorted(table)}")
    gamma, theta = table[model]
    return StudyConfig(family=_FAMILY_OF_LETTER[model[0]], true_phi=ParamVector(gamma, theta),
                       link=link, n=n, m=m, base_seed=base_seed,
                       estimators=tuple(estimators), label=model, **kwargs)


@dataclass(frozen=True)
class EstimatorOutcome:
    estimates: Optional[np.ndarray]
    converged: bool
    loglik: float = float("nan")
    loglik_trace: tuple = ()
    error: str = ""


@dataclass(frozen=True)
class Replication:
    index: int
    seed: int
    loglik_true: float
    outcomes: dict


def simulate_replication(config: StudyConfig, index: int):
    seed = config.base_seed + index
    exog = None
    if config.link.needs_exog:
        exog_seed = config.base_seed if config.shared_exog else seed
        exog = simulate_seasonal_ar(config.eta, config.exog_period, config.n, exog_seed)
    spec = SimulationSpec(
        order=config.order,
        params=IngarchParams.from_vector(config.true_phi.theta, config.order),
        link=config.link.with_params(config.true_phi.gamma),
        n=config.n, seed=seed, exog=exog)
    return simulate_tvzip(spec), seed


def run_replication(config: StudyConfig, index: int) -> Replication:
    sim, seed = simulate_replication(config, index)
    data = sim.series
    try:
        ll_true = estimation.log_likelihood(config.true_phi, data, config.link, config.order)
    except TVZIPError:
        ll_true = float("nan")
    outcomes = {}
    for name in config.estimators:
        try:
            res = estimation.fit(data, config.link, config.order, method=name)
            outcomes[name] = EstimatorOutcome(res.phi_hat.flat, res.converged, res.loglik,
                                              res.loglik_trace)
        except (TVZIPError, FloatingPointError, np.linalg.LinAlgError) as exc:
            outcomes[name] = EstimatorOutcome(None, False, error=f"{type(exc).__name__}: {exc}")
    return Replication(index, seed, ll_true, outcomes)


def _run_chunk(args):
    config, indexes = args
    return [run_replication(config, j) for j in indexes]


@dataclass(frozen=True)
class EstimatorSummary:
    mean: np.ndarray
    made: np.ndarray
    n_used: int
    n_failed: int


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    summaries: dict
    replications: tuple = field(repr=False, default=())

    @property
    def names(self) -> list[str]:
        return self.config.names

    def estimates(self, estimator: str, converged_only: bool = True) -> np.ndarray:
        rows = [r.outcomes[estimator].estimates for r in self.replications
                if r.outcomes[estimator].estimates is not None
                and (r.outcomes[estimator].converged or not converged_only)]
        return np.array(rows).reshape(len(rows), len(self.names))

    def to_table(self) -> str:
        return format_report(self)

    def to_csv(self) -> str:
        return report_csv(self)


def summarize(config: StudyConfig, replications: Sequence[Replication]) -> dict:
    truth = config.true_phi.flat
    out = {}
    for name in config.estimators:
        rows = [r.outcomes[name].estimates for r in replications
                if r.outcomes[name].converged and r.outcomes[name].estimates is not None]
        failed = len(replications) - len(rows)
        if rows:
            est = np.array(rows)
            mean = est.mean(axis=0)
            dev = np.array([made(est[:, k], truth[k]) for k in range(truth.size)])
        else:
            mean = dev = np.full(truth.size, np.nan)
        out[name] = EstimatorSummary(mean, dev, len(rows), failed)
    return out


def run_simulation_study(config: StudyConfig) -> StudyReport:
    """Simulate, fit and aggregate ``config.m`` replications."""
    indexes = list(range(1, config.m + 1))
    if config.workers > 1 and config.m > 1:
        chunks = [indexes[i::config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            reps = [r for part in pool.map(_run_chunk, [(config, c) for c in chunks])
                    for r in part]
    else:
        reps = [run_replication(config, j) for j in indexes]
    reps.sort(key=lambda r: r.index)
    return StudyReport(config, summarize(config, reps), tuple(reps))


def _cell(mean, dev):
    return "nan" if not np.isfinite(mean) else f"{mean:.4f} ({dev:.4f})"


def format_report(report: StudyReport) -> str:
    """Mean estimates with MADE in parentheses, one row per estimator."""
    cfg = report.config
    names = report.names
    header = ["Estimator", "Model", "N"] + names + ["used", "failed"]
    rows = [["", "True", ""] + [f"{v:.4f}" for v in cfg.true_phi.flat] + ["", ""]]
    for name, summ in report.summaries.items():
        rows.append([name, cfg.label or cfg.family, str(cfg.n)]
                    + [_cell(a, b) for a, b in zip(summ.mean, summ.made)]
                    + [str(summ.n_used), str(summ.n_failed)])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = [f"link={cfg.link.family} family={cfg.family} m={cfg.m} seed={cfg.base_seed}"]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def report_csv(report: StudyReport) -> str:
    cfg = report.config
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "link", "family", "n", "m", "seed", "estimator", "parameter",
                     "true", "mean", "made", "used", "failed"])
    truth = cfg.true_phi.flat
    for name, summ in report.summaries.items():
        for k, pname in enumerate(report.names):
            writer.writerow([cfg.label, cfg.link.family, cfg.family, cfg.n, cfg.m,
                             cfg.base_seed, name, pname, repr(float(truth[k])),
                             repr(float(summ.mean[k])), repr(float(summ.made[k])),
                             summ.n_used, summ.n_failed])
    return buf.getvalue()
