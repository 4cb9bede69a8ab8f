"""Command-line front end.

Every subcommand reads a flat JSON parameter file (``--params``) or uses
the default point ``k0=2.5, eT=1, k1=1, km1=1, k2=3``; ``--set key=value``
overrides single entries.  Exit codes: 0 success, 1 malformed input,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import serialize
from .diagnostics import annotations, delta_argmax, qssa_diagnostics, switch_threshold
from .errors import ConvergenceError, NumericalError, ParameterError
from .integrate import CompareMode, IntegratorConfig, compare_trajectories, integrate, simulate
from .manifold import ManifoldCurve, axis_crossing, default_grid, fraser_step, slow_manifold
from .model import (EquilibriumKind, ParameterFamily, RateParameters, State,
                    classify_parameter_point, equilibrium)
from .phase_plane import nullclines, wedge_inflow_check, wedge_range
from .poincare import classify_infinity, distinguished_trajectory
from .reductions import ReductionKind, reduced_model

DEFAULT_PARAMS = RateParameters(2.5, 1.0, 1.0, 1.0, 3.0)
FIG1_S0 = (0.0, 15.0, 30.0)
FIG1_C0 = (0.0, 1.4)


@dataclass
class Scenario:
    """Inputs shared by the subcommands."""

    params: RateParameters
    initial: State = State(0.0, 0.0)
    t_end: float = 100.0
    grid_smax: float | None = None
    eps_list: list = field(default_factory=lambda: [0.02, 0.04, 0.08])
    family: ParameterFamily | None = None
    seed: int = 42

    def __post_init__(self):
        if not self.t_end > 0:
            raise ParameterError("t_end must be positive")
        if any(not 0 < e <= 1 for e in self.eps_list):
            raise ParameterError("eps values must lie in (0, 1]")


# ---------------------------------------------------------------------------
# argument helpers

def _parse_assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ParameterError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _load_params(args) -> RateParameters:
    data = DEFAULT_PARAMS.to_dict()
    if args.params:
        data = serialize.read_params(args.params).to_dict()
    for item in args.set or ():
        key, value = _parse_assignment(item)
        if key not in data:
            raise ParameterError(f"unknown parameter {key!r}")
        try:
            data[key] = float(value)
        except ValueError:
            raise ParameterError(f"{key}: not a number: {value!r}") from None
    return RateParameters.from_dict(data)


def parse_axis(text: str) -> tuple[str, list[float]]:
    """``k0=0.1:3.5:0.1`` (inclusive range) or ``k0=1,2,3`` (explicit list)."""
    key, values_text = _parse_assignment(text)
    if key not in DEFAULT_PARAMS.to_dict():
        raise ParameterError(f"unknown parameter {key!r}")
    try:
        if ":" in values_text:
            parts = [Decimal(v) for v in values_text.split(":")]
            if len(parts) != 3:
                raise ParameterError(f"range must be start:stop:step, got {values_text!r}")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ParameterError(f"empty or backwards range {values_text!r}")
            n = int((stop - start) / step) + 1
            values = [float(start + i * step) for i in range(n)]
        else:
            values = [float(Decimal(v)) for v in values_text.split(",")]
    except InvalidOperation:
        raise ParameterError(f"malformed axis {text!r}") from None
    return key, values


def _jobs(args) -> int:
    if args.jobs is not None:
        jobs = args.jobs
    else:
        env = os.environ.get("QSSA_LAB_JOBS", "1")
        try:
            jobs = int(env)
        except ValueError:
            raise ParameterError(f"QSSA_LAB_JOBS must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ParameterError("--jobs must be at least 1")
    return jobs


def _reductions(names) -> list[ReductionKind]:
    return [ReductionKind.from_cli(n) for n in names]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cfg(args) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=args.rtol, abs_tol=args.atol)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    p = _load_params(args)
    sc = Scenario(p, State(args.s0, args.c0), args.t_end)
    cfg = _cfg(args)
    t_out = np.linspace(0.0, sc.t_end, args.n_out)
    out = _out_dir(args)
    full = simulate(p, sc.initial, sc.t_end, IntegratorConfig(cfg.rel_tol, cfg.abs_tol,
                                                              dense_grid=t_out))
    serialize.write_trajectory(out / "full.csv", full)
    header, columns = ["t", "s", "c"], [full.times, full["s"], full["c"]]
    summary = {"params": p.to_dict(), "initial": list(sc.initial), "reductions": {}}
    for kind in _reductions(args.reduction or ()):
        model = reduced_model(p, kind)
        s0 = model.map_initial(*sc.initial)
        red = integrate(model.vector_field(), [s0], (0.0, sc.t_end),
                        IntegratorConfig(cfg.rel_tol, cfg.abs_tol, dense_grid=t_out),
                        names=("s",))
        serialize.write_trajectory(out / f"{kind.cli_name}.csv", red)
        header.append(f"s_{kind.cli_name}")
        columns.append(red["s"])
        entry = {"s0_mapped": s0, "formula": model.formula}
        if args.compare:
            header.append(f"abs_err_{kind.cli_name}")
            columns.append(np.abs(red["s"] - full["s"]))
            mode = CompareMode.L2_S if args.mode == "l2" else CompareMode.SUP_NORM_S
            entry[mode.value] = compare_trajectories(full, red, mode)
        summary["reductions"][kind.cli_name] = entry
    serialize.write_table(out / "combined.csv", header, columns)
    serialize.write_json(out / "summary.json", summary)
    if args.compare:
        serialize.write_json(sys.stdout, summary)
    return 0


def cmd_manifold(args) -> int:
    p = _load_params(args)
    grid = default_grid(p, args.n_grid, args.s_max)
    curve, report = slow_manifold(p, grid, tol=args.tol, max_iter=args.max_iter,
                                  method=args.method)
    out = _out_dir(args)
    serialize.write_curve(out / "slow_manifold.csv", curve)
    payload = report.to_dict()
    payload["params"] = p.to_dict()
    payload["axis_crossing"] = axis_crossing(curve)
    serialize.write_json(out / "report.json", payload)
    if not report.converged:
        raise ConvergenceError(report.message)
    return 0


def cmd_reduce(args) -> int:
    p = _load_params(args)
    kinds = _reductions(args.reduction) if args.reduction else list(ReductionKind)
    s_max = args.s_max if args.s_max is not None else default_grid(p, 5)[-1]
    s = np.linspace(0.0, s_max, args.n)
    header, columns = ["s"], [s]
    for kind in kinds:
        model = reduced_model(p, kind)
        header += [f"{kind.cli_name}_rhs", f"{kind.cli_name}_c"]
        columns += [np.broadcast_to(model.rhs_s(s), s.shape),
                    np.broadcast_to(model.manifold_c(s), s.shape)]
        print(f"# {kind.cli_name}: {model.formula}", file=sys.stderr)
    serialize.write_table(args.out, header, columns)
    return 0


def diagnostics_row(p: RateParameters) -> dict:
    """Flat record of parameters, diagnostics and the equilibrium."""
    d = qssa_diagnostics(p)
    row = dict(p.to_dict())
    row.update(d.to_dict())
    row["governing"] = d.governing
    row["switch_threshold"] = switch_threshold()
    row["delta_argmax"] = delta_argmax(p) if d.delta_m is not None else None
    eq = equilibrium(p)
    row["s_hat"] = eq.s_hat if eq is not None else None
    row["c_hat"] = eq.c_hat if eq is not None else None
    row["equilibrium"] = eq.kind.value if eq is not None else "None"
    row["families"] = "|".join(f.value for f in classify_parameter_point(p))
    return row


def cmd_diagnose(args) -> int:
    p = _load_params(args)
    row = diagnostics_row(p)
    row.update({f"note_{k}": v for k, v in annotations(qssa_diagnostics(p)).items()})
    serialize.write_json(args.out, row)
    return 0


def cmd_phase(args) -> int:
    p = _load_params(args)
    nc = nullclines(p)
    lo, hi = wedge_range(p)
    s_max = args.s_max if args.s_max is not None else max(hi, 10 * p.K_M)
    s = np.linspace(0.0, s_max, args.n)
    out = _out_dir(args)
    serialize.write_table(out / "nullclines.csv", ("s", "Nc", "Ns"), nc.table(s).T)
    report = wedge_inflow_check(p, n_samples=args.n_samples, strict=False)
    payload = report.to_dict()
    payload["s_tilde"] = nc.s_tilde
    serialize.write_json(out / "wedge.json", payload)
    if not report.passed:
        raise NumericalError("; ".join(report.violations))
    return 0


def cmd_poincare(args) -> int:
    p = _load_params(args)
    out = _out_dir(args)
    classification = classify_infinity(p)
    payload = classification.to_dict()
    payload["params"] = p.to_dict()
    if p.k2 * p.e_T != p.k0:
        dt = distinguished_trajectory(p, offset=args.offset)
        serialize.write_trajectory(out / "distinguished.csv", dt.trajectory)
        serialize.write_table(out / "chart.csv", ("t", "x2", "x3"), dt.chart_points.T)
        payload["distinguished"] = {
            "case": dt.case,
            "seed": list(dt.seed_chart),
            "endpoint": dt.endpoint,
            "endpoint_distance": dt.endpoint_distance,
            "tail_max_deviation": dt.tail_max_deviation,
            "cutoff": dt.cutoff,
        }
    else:
        payload["distinguished"] = None
    serialize.write_json(out / "classification.json", payload)
    return 0


SWEEP_COLUMNS = ("k0", "eT", "k1", "km1", "k2", "eps_c", "tau0", "eps_star", "eps_o", "alpha",
                 "delta0", "delta_m", "governing", "s_hat", "c_hat")


def _sweep_row(values: tuple) -> list:
    p = RateParameters(*values)
    row = diagnostics_row(p)
    return [row[c] if row[c] is not None else float("nan") for c in SWEEP_COLUMNS] + [row["verdict"]]


def cmd_sweep(args) -> int:
    base = _load_params(args)
    axes = [parse_axis(a) for a in args.axis]
    keys = [k for k, _ in axes]
    if len(set(keys)) != len(keys):
        raise ParameterError("each parameter may appear on one axis only")
    points = []
    for combo in itertools.product(*(v for _, v in axes)):
        data = base.to_dict()
        data.update(dict(zip(keys, combo)))
        points.append(RateParameters.from_dict(data).as_tuple())
    jobs = _jobs(args)
    if jobs == 1 or len(points) < 2:
        rows = [_sweep_row(pt) for pt in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, points, chunksize=max(1, len(points) // (4 * jobs))))
    stream, close = serialize._open_write(args.out)
    try:
        stream.write(",".join(SWEEP_COLUMNS + ("verdict",)) + "\n")
        for row in rows:
            stream.write(",".join([serialize.fmt(v) for v in row[:-1]] + [row[-1]]) + "\n")
    finally:
        if close:
            stream.close()
    return 0


# figures

def _fig1(p: RateParameters, out: Path, t_end: float, s_curve_max: float, cfg: IntegratorConfig):
    t_out = np.linspace(0.0, t_end, 1001)
    runs = []
    for s0, c0 in itertools.product(FIG1_S0, FIG1_C0):
        traj = simulate(p, (s0, c0), t_end, IntegratorConfig(cfg.rel_tol, cfg.abs_tol,
                                                              dense_grid=t_out))
        name = f"traj_s{s0:g}_c{c0:g}.csv"
        serialize.write_trajectory(out / name, traj)
        runs.append({"file": name, "s0": s0, "c0": c0})
    s = np.linspace(0.0, s_curve_max, 601)
    sq = reduced_model(p, ReductionKind.SQSSA)
    serialize.write_table(out / "sqssa_curve.csv", ("s", "c"), [s, sq.manifold_c(s)])
    eq = equilibrium(p)
    meta = {
        "params": p.to_dict(),
        "initial_conditions": runs,
        "initial_condition_grid": {"s0": list(FIG1_S0), "c0": list(FIG1_C0),
                                   "note": "default grid of starting points"},
        "t_end": t_end,
        "equilibrium": None if eq is None else {"s_hat": eq.s_hat, "c_hat": eq.c_hat,
                                                "kind": eq.kind.value},
    }
    serialize.write_json(out / "metadata.json", meta)


def _fig2(out: Path):
    meta = {}
    for tag, k0 in (("unbounded", 3.5), ("node", 2.5)):
        p = DEFAULT_PARAMS.replace(k0=k0)
        nc = nullclines(p)
        s = np.linspace(0.0, 60.0, 601)
        serialize.write_table(out / f"nullclines_{tag}.csv", ("s", "Nc", "Ns"), nc.table(s).T)
        report = wedge_inflow_check(p, strict=False)
        meta[tag] = {"params": p.to_dict(), "s_tilde": nc.s_tilde, "wedge": report.to_dict()}
        eq = equilibrium(p)
        if eq.kind is EquilibriumKind.ATTRACTING_NODE_FIRST_QUADRANT:
            meta[tag]["equilibrium"] = [eq.s_hat, eq.c_hat]
    serialize.write_json(out / "metadata.json", meta)


def _fig3(out: Path, n_iterates: int = 4):
    p = DEFAULT_PARAMS
    grid = np.linspace(0.0, 30.0, 301)
    sq = reduced_model(p, ReductionKind.SQSSA).manifold_c(grid)
    curves = [ManifoldCurve.zero(grid)]
    for _ in range(n_iterates):
        curves.append(fraser_step(p, curves[-1]))
    slow, report = slow_manifold(p, grid)
    header = ["s", "sqssa"] + [f"C{i}" for i in range(1, n_iterates + 1)] + ["slow"]
    columns = [grid, sq] + [c.c_values for c in curves[1:]] + [slow.c_values]
    serialize.write_table(out / "iterates.csv", header, columns)
    deltas = [float(np.max(np.abs(b.c_values - a.c_values))) for a, b in zip(curves, curves[1:])]
    eq = equilibrium(p)
    serialize.write_json(out / "metadata.json", {
        "params": p.to_dict(),
        "iterate_sup_deltas": deltas,
        "slow_manifold": report.to_dict(),
        "axis_crossing": axis_crossing(slow),
        "equilibrium": [eq.s_hat, eq.c_hat],
    })
    if not report.converged:
        raise ConvergenceError(report.message)


def cmd_figures(args) -> int:
    out = _out_dir(args) / args.figure
    out.mkdir(parents=True, exist_ok=True)
    cfg = IntegratorConfig(rel_tol=args.rtol, abs_tol=args.atol)
    if args.figure == "fig1a":
        _fig1(DEFAULT_PARAMS, out, 300.0, 30.0, cfg)
    elif args.figure == "fig1b":
        _fig1(DEFAULT_PARAMS.replace(k0=3.5), out, 100.0, 80.0, cfg)
    elif args.figure == "fig2":
        _fig2(out)
    else:
        _fig3(out)
    print(out)
    return 0


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qssa-lab", description="Open Michaelis-Menten analysis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default=None, out_help="output directory"):
        sp.add_argument("--params", help="JSON file with keys k0, eT, k1, km1, k2")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
        sp.add_argument("--out", default=out_default, help=out_help)

    def tolerances(sp):
        sp.add_argument("--rtol", type=float, default=1e-9)
        sp.add_argument("--atol", type=float, default=1e-12)

    sp = sub.add_parser("simulate", help="integrate the full system and reductions")
    common(sp, "qssa_out")
    tolerances(sp)
    sp.add_argument("--s0", type=float, default=0.0)
    sp.add_argument("--c0", type=float, default=0.0)
    sp.add_argument("--t-end", type=float, default=100.0)
    sp.add_argument("--n-out", type=int, default=1001, help="number of output times")
    sp.add_argument("--reduction", action="append",
                    help="sqssa|qea|linear|fenichel-k0k1|fenichel-k0k2|classical-k0k2")
    sp.add_argument("--compare", action="store_true", help="add error columns and a summary")
    sp.add_argument("--mode", choices=("sup", "l2"), default="sup")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("manifold", help="slow manifold from the invariance equation")
    common(sp, "qssa_out")
    sp.add_argument("--n-grid", type=int, default=2001)
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--method", choices=("newton", "picard"), default="newton")
    sp.set_defaults(func=cmd_manifold)

    sp = sub.add_parser("reduce", help="tabulate reduced right-hand sides and curves")
    common(sp, "-", "output CSV file ('-' for stdout)")
    sp.add_argument("--reduction", action="append")
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--n", type=int, default=201)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("diagnose", help="validity diagnostics as JSON")
    common(sp, "-", "output JSON file ('-' for stdout)")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("phase", help="nullclines and the wedge inflow check")
    common(sp, "qssa_out")
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--n", type=int, default=501)
    sp.add_argument("--n-samples", type=int, default=100)
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("poincare", help="behaviour at infinity and the distinguished trajectory")
    common(sp, "qssa_out")
    sp.add_argument("--offset", type=float, default=1e-6)
    sp.set_defaults(func=cmd_poincare)

    sp = sub.add_parser("sweep", help="diagnostics over a Cartesian parameter grid")
    common(sp, "-", "output CSV file ('-' for stdout)")
    sp.add_argument("--axis", action="append", required=True,
                    help="KEY=start:stop:step or KEY=v1,v2,...")
    sp.add_argument("--jobs", type=int, help="worker processes (default $QSSA_LAB_JOBS or 1)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("figures", help="datasets behind the standard figures")
    sp.add_argument("figure", choices=("fig1a", "fig1b", "fig2", "fig3"))
    sp.add_argument("--out", default="qssa_figures")
    tolerances(sp)
    sp.set_defaults(func=cmd_figures)
    return parser


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except NumericalError as exc:
        print(f"qssa-lab: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, ValueError, OSError) as exc:
        print(f"qssa-lab: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
