"""Command-line runner producing the data tables behind each figure.

Examples::

    bayestherm range --gamma-tau 0.01,0.1,inf
    bayestherm compare --true-t 0.05:200:80 --out compare.csv
    bayestherm scaling --n-list 10,100,1000,10000 --t-range 0.1,10
    bayestherm single --n 50 --format json
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import parse_gamma_tau
from .estimators import ALL_KINDS, EstimatorKind, report
from .global_metrics import (
    global_result,
    sweep,
    van_trees_equilibrium,
)
from .posterior import ImpossibleOutcomeError, build_grid, posterior
from .priors import PriorKind, PriorSpec, build_prior
from .sensitivity import UndetectableError, detectable_range, peak_fisher_ratio
from .thermal_model import ProbeConfig


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"--{field_name}: {message}")
        self.field_name = field_name


@dataclass
class RunConfig:
    subcommand: str
    n_probes: int = 200
    gamma_tau: list = field(default_factory=lambda: [math.inf])
    prior: list = field(default_factory=lambda: ["jeffreys"])
    grid_min: float = 0.01
    grid_max: float = 200.0
    grid_step: float = 1e-3
    estimators: list = field(default_factory=lambda: [k.value for k in ALL_KINDS])
    t_range: tuple = (0.1, 10.0)
    true_t: list = field(default_factory=list)
    n_list: list = field(default_factory=list)
    n: int | None = None
    with_rrms: bool = False
    format: str = "csv"
    out: str | None = None
    jobs: int = 1

    def to_json(self):
        d = asdict(self)
        d["gamma_tau"] = [_gt_label(g) for g in self.gamma_tau]
        return d


def _gt_label(g):
    return "inf" if math.isinf(g) else g


def _split(text):
    return [s for s in (p.strip() for p in str(text).split(",")) if s]


def _float_list(text, name):
    try:
        return [float(s) for s in _split(text)]
    except ValueError:
        raise ConfigError(name, f"expected comma-separated numbers, got {text!r}") from None


def _parse_true_t(text):
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        try:
            lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise ConfigError("true-t", f"range must be lo:hi:num, got {text!r}") from None
        if len(parts) != 3 or not 0 < lo < hi or num < 1:
            raise ConfigError("true-t", f"range must be lo:hi:num with 0 < lo < hi, got {text!r}")
        return [float(x) for x in np.geomspace(lo, hi, num)]
    vals = _float_list(text, "true-t")
    if not vals or any(v <= 0 for v in vals):
        raise ConfigError("true-t", "temperatures must be positive")
    return vals


def resolve(args) -> RunConfig:
    """Turn parsed arguments into a validated :class:`RunConfig`."""
    cmd = args.command
    cfg = RunConfig(cmd)
    if args.n_probes < 1:
        raise ConfigError("n-probes", f"must be >= 1, got {args.n_probes}")
    cfg.n_probes = args.n_probes
    try:
        cfg.gamma_tau = [parse_gamma_tau(s) for s in _split(args.gamma_tau)]
    except ValueError as exc:
        raise ConfigError("gamma-tau", str(exc)) from None
    if not cfg.gamma_tau:
        raise ConfigError("gamma-tau", "list is empty")
    if cmd not in ("range", "noneq") and len(cfg.gamma_tau) != 1:
        raise ConfigError("gamma-tau", f"'{cmd}' takes a single value")
    cfg.prior = _split(args.prior)
    for p in cfg.prior:
        try:
            PriorKind(p)
        except ValueError:
            raise ConfigError("prior", f"unknown prior {p!r}") from None
    if not cfg.prior:
        raise ConfigError("prior", "list is empty")
    if cmd != "prior-compare" and len(cfg.prior) != 1:
        raise ConfigError("prior", f"'{cmd}' takes a single prior")
    if not 0 < args.grid_min < args.grid_max:
        raise ConfigError("grid-min", f"need 0 < grid-min < grid-max, got {args.grid_min}, {args.grid_max}")
    if not math.isfinite(args.grid_max):
        raise ConfigError("grid-max", "flat and 1/t priors are improper on an infinite range")
    if not args.grid_step > 0:
        raise ConfigError("grid-step", f"must be > 0, got {args.grid_step}")
    cfg.grid_min, cfg.grid_max, cfg.grid_step = args.grid_min, args.grid_max, args.grid_step
    try:
        cfg.estimators = [EstimatorKind.parse(s).value for s in _split(args.estimators)]
    except ValueError as exc:
        raise ConfigError("estimators", str(exc)) from None
    if not cfg.estimators:
        raise ConfigError("estimators", "list is empty")
    tr = _float_list(args.t_range, "t-range")
    if len(tr) != 2 or not tr[0] < tr[1]:
        raise ConfigError("t-range", f"need t1,t2 with t1 < t2, got {args.t_range!r}")
    if cmd == "scaling" and not cfg.grid_min <= tr[0] < tr[1] <= cfg.grid_max:
        raise ConfigError("t-range", f"need grid-min <= t1 < t2 <= grid-max, got {args.t_range!r}")
    cfg.t_range = (tr[0], tr[1])
    cfg.true_t = _parse_true_t(args.true_t)
    if cmd in ("compare", "prior-compare", "noneq") and any(
            not cfg.grid_min <= t <= cfg.grid_max for t in cfg.true_t):
        raise ConfigError("true-t", "temperatures must lie inside the grid")
    try:
        cfg.n_list = [int(s) for s in _split(args.n_list)]
    except ValueError:
        raise ConfigError("n-list", f"expected comma-separated integers, got {args.n_list!r}") from None
    if cmd == "scaling":
        if not cfg.n_list or any(n < 1 for n in cfg.n_list):
            raise ConfigError("n-list", "need a nonempty list of positive integers")
        if cfg.n_list != sorted(cfg.n_list):
            raise ConfigError("n-list", "must be ascending")
    if cmd == "single":
        if args.n is None or not 0 <= args.n <= cfg.n_probes:
            raise ConfigError("n", f"need an outcome 0 <= n <= {cfg.n_probes}")
        cfg.n = args.n
    cfg.with_rrms = bool(getattr(args, "with_rrms", False))
    cfg.format, cfg.out, cfg.jobs = args.format, args.out, max(1, args.jobs)
    return cfg


def _grid(run: RunConfig):
    return build_grid(run.grid_min, run.grid_max, step=run.grid_step)


# ---------------------------------------------------------------------------
# subcommands: each returns (columns, rows)
# ---------------------------------------------------------------------------

def cmd_range(run: RunConfig):
    cols = ["gamma_tau", "t0", "t_inf", "t_inf_over_t0", "peak_fisher_ratio"]
    rows = []
    for g in run.gamma_tau:
        probe = ProbeConfig(run.n_probes, g)
        try:
            dr = detectable_range(probe, bracket=(run.grid_min, run.grid_max))
            t0, ti, ratio = dr.t0, dr.t_inf, dr.ratio
        except UndetectableError:
            t0 = ti = ratio = None
        peak = 1.0 if math.isinf(g) else (peak_fisher_ratio(g, probe) if g > 0 else 0.0)
        rows.append([_gt_label(g), t0, ti, ratio, peak])
    return cols, rows


def _compare_columns(kinds):
    cols = ["t", "t0", "t_inf", "eps90_over_t"]
    for k in kinds:
        cols += [f"theta_bar_over_t[{k.value}]", f"rms_over_t[{k.value}]"]
        if k is not EstimatorKind.MODE:
            cols.append(f"err_over_rms[{k.value}]")
        cols += [f"conf_lo_over_t[{k.value}]", f"conf_hi_over_t[{k.value}]"]
    return cols


def _compare_rows(run: RunConfig, gamma_tau: float, prior_kind: str):
    kinds = [EstimatorKind.parse(k) for k in run.estimators]
    probe = ProbeConfig(run.n_probes, gamma_tau)
    prior = build_prior(PriorSpec(prior_kind), probe, _grid(run))
    try:
        dr = detectable_range(probe, bracket=(run.grid_min, run.grid_max))
        t0, ti = dr.t0, dr.t_inf
    except UndetectableError:
        t0 = ti = None
    rows = []
    for r in sweep(run.true_t, prior, probe, kinds):
        t = r.true_t
        row = [t, t0, ti, r.credible_width / t]
        for k in kinds:
            row += [r.mean_estimate[k] / t, r.rms[k] / t]
            if k is not EstimatorKind.MODE:
                row.append(r.mean_error[k] / r.rms[k] if r.rms[k] > 0 else None)
            lo, hi = r.confidence[k]
            row += [lo / t, hi / t]
        rows.append(row)
    return rows


def _compare_task(args):
    run, g, p = args
    return _compare_rows(run, g, p)


def _pool_map(run, fn, items):
    if run.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=run.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_compare(run: RunConfig):
    kinds = [EstimatorKind.parse(k) for k in run.estimators]
    return _compare_columns(kinds), _compare_rows(run, run.gamma_tau[0], run.prior[0])


def cmd_prior_compare(run: RunConfig):
    kinds = [EstimatorKind.parse(k) for k in run.estimators]
    parts = _pool_map(run, _compare_task, [(run, run.gamma_tau[0], p) for p in run.prior])
    rows = [[p] + row for p, block in zip(run.prior, parts) for row in block]
    return ["prior"] + _compare_columns(kinds), rows


def cmd_noneq(run: RunConfig):
    kinds = [EstimatorKind.parse(k) for k in run.estimators]
    parts = _pool_map(run, _compare_task, [(run, g, run.prior[0]) for g in run.gamma_tau])
    rows = [[_gt_label(g)] + row for g, block in zip(run.gamma_tau, parts) for row in block]
    return ["gamma_tau"] + _compare_columns(kinds), rows


def _scaling_task(args):
    run, n = args
    probe = ProbeConfig(n, run.gamma_tau[0])
    prior = build_prior(PriorSpec(run.prior[0]), probe, _grid(run))
    t1, t2 = run.t_range
    res = global_result(probe, prior, t1, t2, run.estimators, with_rrms=run.with_rrms)
    kinds = [EstimatorKind.parse(k) for k in run.estimators if k != "md"]
    row = [n]
    row += [res.finite_cost[k].value for k in kinds]
    row += [res.relative_error[k] for k in kinds]
    if run.with_rrms:
        row += [res.rrms[EstimatorKind.parse(k)] for k in run.estimators]
    exact, approx = van_trees_equilibrium(n)
    row += [res.crb, res.van_trees_numeric]
    row += [exact, approx] if probe.is_equilibrium else [None, None]
    return row


def cmd_scaling(run: RunConfig):
    kinds = [EstimatorKind.parse(k) for k in run.estimators if k != "md"]
    cols = ["N"]
    cols += [f"C_fin[{k.value}][{k.cost_unit}]" for k in kinds]
    cols += [f"E_fin[{k.value}]" for k in kinds]
    if run.with_rrms:
        cols += [f"E_rRMS[{k}]" for k in run.estimators]
    cols += ["E_CRB", "van_trees_numeric", "van_trees_closed_form", "van_trees_approx"]
    rows = _pool_map(run, _scaling_task, [(run, n) for n in run.n_list])
    return cols, rows


def cmd_single(run: RunConfig):
    probe = ProbeConfig(run.n_probes, run.gamma_tau[0])
    prior = build_prior(PriorSpec(run.prior[0]), probe, _grid(run))
    post = posterior(run.n, prior, probe)
    cols = ["n", "evidence", "estimator", "estimate", "error", "q05", "q50", "q95", "cutoff_sensitive"]
    rows = []
    for k in run.estimators:
        rep = report(k, post)
        rows.append([run.n, post.evidence, rep.kind.value, rep.estimate, rep.error,
                     rep.q05, rep.q50, rep.q95, rep.cutoff_sensitive])
    return cols, rows


COMMANDS = {
    "range": cmd_range,
    "compare": cmd_compare,
    "scaling": cmd_scaling,
    "prior-compare": cmd_prior_compare,
    "noneq": cmd_noneq,
    "single": cmd_single,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".9g")
    return str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return float(format(v, ".9g"))
    if isinstance(v, np.integer):
        return int(v)
    return v


def render(run: RunConfig, cols, rows) -> str:
    if run.format == "json":
        doc = {
            "config": run.to_json(),
            "columns": cols,
            "rows": [{c: _json_value(v) for c, v in zip(cols, row)} for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-probes", type=int, default=200)
    common.add_argument("--gamma-tau", default=None,
                        help="coupling time(s) gamma*tau, comma separated; 'inf' = equilibrium")
    common.add_argument("--prior", default=None, help="jeffreys | flat | reciprocal")
    common.add_argument("--grid-min", type=float, default=0.01)
    common.add_argument("--grid-max", type=float, default=200.0)
    common.add_argument("--grid-step", type=float, default=1e-3)
    common.add_argument("--estimators", default=None, help="comma-separated labels: md,1,1r,2,2r,2l")
    common.add_argument("--t-range", default="0.1,10", help="t1,t2 for global metrics")
    common.add_argument("--true-t", default="0.05:200:80",
                        help="comma list, or lo:hi:num for log-spaced points")
    common.add_argument("--n-list", default="", help="comma-separated probe numbers")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = argparse.ArgumentParser(prog="bayestherm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("range", parents=[common], help="detectable range and peak Fisher ratio vs gamma*tau")
    sub.add_parser("compare", parents=[common], help="estimator comparison vs true temperature")
    sc = sub.add_parser("scaling", parents=[common], help="global costs, errors and bounds vs N")
    sc.add_argument("--with-rrms", action="store_true", help="also compute the full-range relative RMS")
    sub.add_parser("prior-compare", parents=[common], help="compare over prior kinds")
    sub.add_parser("noneq", parents=[common], help="compare over gamma*tau values")
    sg = sub.add_parser("single", parents=[common], help="posterior report for one outcome")
    sg.add_argument("--n", type=int, default=None, help="observed number of excitations")
    return parser


_DEFAULTS = {
    "range": dict(gamma_tau="0.01,0.1,inf"),
    "noneq": dict(gamma_tau="inf,0.1,0.01", estimators="1r"),
    "prior-compare": dict(prior="jeffreys,reciprocal,flat"),
    "scaling": dict(n_list="1,2,5,10,20,50,100,200,500,1000,2000,5000,10000"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, value in dict(gamma_tau="inf", prior="jeffreys",
                            estimators=",".join(k.value for k in ALL_KINDS)).items():
        if getattr(args, name) is None:
            setattr(args, name, _DEFAULTS.get(args.command, {}).get(name, value))
    if not args.n_list:
        args.n_list = _DEFAULTS.get(args.command, {}).get("n_list", "")
    try:
        run = resolve(args)
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        cols, rows = COMMANDS[run.subcommand](run)
    except (ImpossibleOutcomeError, UndetectableError, ValueError) as exc:
        print(f"bayestherm {run.subcommand}: {exc}", file=sys.stderr)
        return 1
    text = render(run, cols, rows)
    if run.out:
        with open(run.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
