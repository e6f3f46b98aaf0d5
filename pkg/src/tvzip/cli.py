"""Command-line interface: ``tvzip {simulate,fit,select,replicate-study}``.

Every subcommand also reads a flat ``key=value`` file given by ``--config``;
keys are flag names without the leading dashes and flags on the command line
win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import IngarchParams, ModelOrder
from .errors import ConstraintError, TVZIPError
from .estimation import ParamVector, default_init, fit, param_names
from .io import format_value, load_data_file, write_csv
from .links import parse_link
from .selection import compare_models, format_comparison
from .simulation import SimulationSpec, simulate_seasonal_ar, simulate_tvzip
from .study import DEFAULT_M, FULL_M, preset, run_simulation_study

PROG = "tvzip"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _order(text: str) -> ModelOrder:
    try:
        return ModelOrder.parse(text)
    except (TVZIPError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


_FLAG = {"true": True, "1": True, "yes": True, "on": True,
         "false": False, "0": False, "no": False, "off": False}


def _data_options(p):
    p.add_argument("--data", help="input CSV with a header row")
    p.add_argument("--time-col", default="t")
    p.add_argument("--count-col", default="count")
    p.add_argument("--exog-col", default=None, help="covariate column for logistic links")
    p.add_argument("--month-col", default=None,
                   help="month index per row for sinmonthly links")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Time-varying zero-inflated Poisson INGARCH models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one series to CSV")
    p.add_argument("--config")
    p.add_argument("--order", type=_order, help="p,q")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--alpha", type=_floats, default=[], help="alpha_1..alpha_p")
    p.add_argument("--beta", type=_floats, default=[], help="beta_1..beta_q")
    p.add_argument("--link", help="e.g. sin:A=0.1,B=0.1,delta=0.0001,s=12")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--eta", type=float, default=0.25, help="seasonal AR coefficient of the covariate")
    p.add_argument("--exog-period", type=int, default=12)
    p.add_argument("--truth", action="store_true", help="also write lambda_true and omega_true")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_simulate, required=("order", "alpha0", "link", "n", "seed"))

    p = sub.add_parser("fit", help="fit one model to a CSV series")
    p.add_argument("--config")
    _data_options(p)
    p.add_argument("--link", help="numbers are held fixed; 'auto' or omitted ones are estimated")
    p.add_argument("--order", type=_order)
    p.add_argument("--method", choices=("em", "mle"), default="em")
    p.add_argument("--init", default=None, help="starting values as name=value,...")
    p.add_argument("--json", action="store_true", help="print the record as JSON")
    p.add_argument("--fitted", default=None, help="write t,count,lambda,omega to this CSV")
    p.set_defaults(func=cmd_fit, required=("data", "link", "order"))

    p = sub.add_parser("select", help="rank candidate models by AIC and BIC")
    p.add_argument("--config")
    _data_options(p)
    p.add_argument("--candidates", help="file with one 'label order link' line per candidate")
    p.add_argument("--method", choices=("em", "mle"), default="em")
    p.set_defaults(func=cmd_select, required=("data", "candidates"))

    p = sub.add_parser("replicate-study", help="Monte-Carlo study of a benchmark model")
    p.add_argument("--config")
    p.add_argument("--model", help="A1..C3")
    p.add_argument("--link-family", choices=("sin", "logistic"), default="sin")
    p.add_argument("--n", type=int, default=360)
    p.add_argument("--m", type=int, default=None, help=f"replications (default {DEFAULT_M})")
    p.add_argument("--full", action="store_true", help=f"use m = {FULL_M}")
    p.add_argument("--estimator", choices=("both", "em", "mle"), default="both")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--shared-exog", action="store_true",
                   help="one covariate path for all replications")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", default=None, help="also write the long-format summary here")
    p.set_defaults(func=cmd_study, required=("model", "seed"))
    return parser


def read_config(path: str) -> dict:
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _config_defaults(sub: argparse.ArgumentParser, config: dict) -> dict:
    actions = {a.dest: a for a in sub._actions}
    out = {}
    for key, raw in config.items():
        if key not in actions or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            if raw.lower() not in _FLAG:
                raise UsageError(f"config key {key!r} expects true or false")
            out[key] = _FLAG[raw.lower()]
            continue
        try:
            value = action.type(raw) if action.type else raw
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        except ValueError:
            raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r} must be one of {list(action.choices)}")
        out[key] = value
    return out


def parse_args(argv: Sequence[str]):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(f"{PROG}: a command is required "
                         "(simulate, fit, select, replicate-study)")
    if args.config:
        # Config values become defaults, so explicit flags still win.
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**_config_defaults(sub, read_config(args.config)))
        args = parser.parse_args(argv)
    missing = [k for k in args.required if getattr(args, k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise UsageError(f"{PROG} {args.command}: missing required option(s) {flags}")
    return args


@contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_simulate(args) -> int:
    order = args.order
    params = IngarchParams(args.alpha0, args.alpha, args.beta)
    if params.order != order:
        raise ConstraintError(f"--alpha/--beta give order {params.order}, --order says {order}")
    link = parse_link(args.link)
    exog = None
    if link.needs_exog:
        exog = simulate_seasonal_ar(args.eta, args.exog_period, args.n, args.seed)
    sim = simulate_tvzip(SimulationSpec(order, params, link, args.n, args.seed, exog))
    header = ["t", "count"] + (["exog"] if exog is not None else [])
    if args.truth:
        header += ["lambda_true", "omega_true"]
    rows = []
    for i in range(args.n):
        row = [i + 1, int(sim.counts[i])]
        if exog is not None:
            row.append(float(exog[i]))
        if args.truth:
            row += [float(sim.lam[i]), float(sim.omega[i])]
        rows.append(row)
    with _output(args.out) as out:
        write_csv(out, header, rows)
    return 0


def _load(args):
    return load_data_file(args.data, args.time_col, args.count_col, args.exog_col, args.month_col)


def _link_for(text: str, datafile):
    link = parse_link(text, datafile.months if text.strip().lower().startswith("sinmonthly")
                      else None)
    if link.needs_exog and datafile.series.exog is None:
        raise ConstraintError(f"{link.family} link needs --exog-col")
    return link


def _parse_init(text: str, names: Sequence[str]) -> dict:
    values = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in names:
            raise ConstraintError(f"bad --init entry {item!r}; parameters are {list(names)}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise ConstraintError(f"bad --init value for {key}: {raw.strip()!r}") from None
    return values


def _fit_one(series, link, order, method, init_text=None):
    names = param_names(link, order)
    fixed = [n for n in link.param_names if getattr(link, n) is not None]
    init = None
    if init_text:
        overrides = _parse_init(init_text, names)
        clash = sorted(set(overrides) & set(fixed))
        if clash:
            raise ConstraintError(f"--init cannot change fixed link parameters {clash}")
        start = dict(zip(names, default_init(series, link, order).flat))
        start.update(overrides)
        init = ParamVector.from_flat(np.array([start[n] for n in names]), len(link.param_names))
    return fit(series, link, order, method=method, init=init, fixed=fixed)


def cmd_fit(args) -> int:
    datafile = _load(args)
    link = _link_for(args.link, datafile)
    result = _fit_one(datafile.series, link, args.order, args.method, args.init)
    record = result.as_record()
    if args.json:
        print(json.dumps(record, sort_keys=False))
    else:
        for key, value in record.items():
            print(f"{key}={format_value(value)}")
    if args.fitted:
        times = [int(t) if float(t).is_integer() else t for t in datafile.time.tolist()]
        rows = zip(times, datafile.series.counts.tolist(),
                   result.fitted_lambda.tolist(), result.fitted_omega.tolist())
        with _output(args.fitted) as out:
            write_csv(out, [datafile.time_col, "count", "lambda", "omega"], rows)
    return 0


def read_candidates(path: str) -> list[tuple[str, ModelOrder, str]]:
    out = []
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read candidates {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise UsageError(f"{path}:{lineno}: expected 'label order link'")
            try:
                order = ModelOrder.parse(parts[1])
            except (TVZIPError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            out.append((parts[0], order, parts[2]))
    if not out:
        raise UsageError(f"{path} lists no candidates")
    return out


def cmd_select(args) -> int:
    datafile = _load(args)
    fits, labels = [], []
    for label, order, text in read_candidates(args.candidates):
        link = _link_for(text, datafile)
        fits.append(_fit_one(datafile.series, link, order, args.method))
        labels.append(label)
    sys.stdout.write(format_comparison(compare_models(fits, labels)))
    return 0


def cmd_study(args) -> int:
    m = FULL_M if args.full else (args.m if args.m is not None else DEFAULT_M)
    estimators = ("MLE", "EM") if args.estimator == "both" else (args.estimator.upper(),)
    config = preset(args.model, args.link_family, n=args.n, m=m, base_seed=args.seed,
                    estimators=estimators, delta=args.delta, shared_exog=args.shared_exog,
                    workers=args.workers)
    report = run_simulation_study(config)
    sys.stdout.write(report.to_table())
    if args.csv:
        with _output(args.csv) as out:
            out.write(report.to_csv())
    return 0


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (TVZIPError, ValueError, OSError) as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
