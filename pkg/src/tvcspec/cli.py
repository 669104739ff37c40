"""Command-line interface: simulate, test, size-table reproduction, power curves.

Exit codes: 0 success, 2 malformed input or flags, 3 singular design.
Every command is deterministic given its full flag set including the seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .calibrate import (
    asym_pvalue_averaged,
    asym_pvalue_single,
    iid_residual_bootstrap_pvalue,
    wild_bootstrap_component_pvalue,
    wild_bootstrap_pvalue,
)
from .data import BandwidthGrid, TimeSeriesSample
from .dgp import simulate_scenario
from .errors import SingularDesignError, TvcspecError
from .glrt import prewhiten
from .kernels import KERNEL_NAMES, get_kernel
from .loclin import NullSpec, constant_family, gcv_bandwidth, linear_family
from .mc import DEFAULT_MULTIPLIERS, run_size_study
from .power import power_ratio_curve


class CliError(Exception):
    """User-facing input error; maps to exit code 2."""


def _read_sample(path):
    """Parse a CSV with header ``t,y,x1..xp`` or ``y,x1..xp``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as err:
        raise CliError(f"cannot read {path}: {err}") from err
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not lines:
        raise CliError(f"{path}: empty file")
    header = [c.strip().lower() for c in lines[0][1].split(",")]
    if header[:2] == ["t", "y"]:
        drop_t, names = True, header[2:]
    elif header[:1] == ["y"]:
        drop_t, names = False, header[1:]
    else:
        raise CliError(f"{path}: line 1: header must start with 't,y' or 'y'")
    if not names or any(not c.startswith("x") for c in names):
        raise CliError(f"{path}: line 1: regressor columns must be named x1..xp")
    width = len(header)
    rows = []
    for lineno, ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != width:
            raise CliError(f"{path}: line {lineno}: expected {width} fields, got {len(parts)}")
        try:
            vals = [float(v) for v in parts]
        except ValueError:
            raise CliError(f"{path}: line {lineno}: non-numeric value") from None
        if not all(np.isfinite(vals)):
            raise CliError(f"{path}: line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise CliError(f"{path}: no data rows")
    data = np.asarray(rows)
    if drop_t:
        t = data[:, 0]
        if np.any(np.diff(t) <= 0):
            bad = int(np.argmax(np.diff(t) <= 0)) + 3  # header + 1-based + next row
            raise CliError(f"{path}: line {bad}: time column must be strictly increasing")
        data = data[:, 1:]
    return TimeSeriesSample(data[:, 1:], data[:, 0])


def _parse_null(spec: str, sample: TimeSeriesSample):
    """Null grammar: zero | constant | linear | component:j=0.

    Returns (sample, null, info); parametric nulls are prewhitened here, and
    component nulls reorder the tested coordinate first.
    """
    spec = spec.strip().lower()
    if spec == "zero":
        return sample, NullSpec.zero(), {"null": "zero"}
    if spec == "constant":
        new, theta = prewhiten(sample, constant_family())
        return new, NullSpec.zero(), {"null": "constant", "theta": list(theta)}
    if spec == "linear":
        new, theta = prewhiten(sample, linear_family())
        return new, NullSpec.zero(), {"null": "linear", "theta": list(theta)}
    if spec.startswith("component:"):
        body = spec.split(":", 1)[1]
        if not body.endswith("=0"):
            raise CliError(f"unsupported component null {spec!r}; use component:<j>=0")
        try:
            j = int(body[:-2])
        except ValueError:
            raise CliError(f"bad coordinate in {spec!r}") from None
        if not 1 <= j <= sample.p:
            raise CliError(f"coordinate {j} outside 1..{sample.p}")
        if sample.p < 2:
            raise CliError("component nulls need at least two regressors")
        order = [j - 1] + [k for k in range(sample.p) if k != j - 1]
        reordered = TimeSeriesSample(sample.x[:, order], sample.y)
        return reordered, NullSpec.component(p1=1), {"null": spec, "coordinate": j}
    raise CliError(f"unknown null {spec!r}; use zero, constant, linear or component:<j>=0")


def _pick_grid(args, sample, kernel):
    if args.bandwidth is not None and args.grid is not None:
        raise CliError("give either --bandwidth or --grid, not both")
    if args.bandwidth is not None:
        return float(args.bandwidth), True
    spec = args.grid if args.grid is not None else "auto"
    if spec == "auto":
        n = sample.n
        lo = max(0.03, 10.0 / n)
        candidates = np.geomspace(lo, 0.4, 12)
        anchor = gcv_bandwidth(sample, kernel, candidates) * n ** (-1.0 / 45.0)
        return BandwidthGrid.from_anchor(anchor, n=n), False
    try:
        values = sorted(float(v) for v in spec.split(","))
    except ValueError:
        raise CliError(f"bad --grid value {spec!r}") from None
    if len(values) == 1:
        return float(values[0]), True
    gamma = 2.0 / 9.0
    scale = sample.n**gamma
    return (
        BandwidthGrid(values=tuple(values), gamma=gamma,
                      c_min=values[0] * scale, c_max=values[-1] * scale),
        False,
    )


def _cmd_test(args) -> int:
    sample = _read_sample(args.data)
    kernel = get_kernel(args.kernel)
    sample, null, info = _parse_null(args.null, sample)
    grid_or_b, single = _pick_grid(args, sample, kernel)
    method = args.method.upper()

    if null.kind == "component":
        if method != "WILD":
            raise CliError("component nulls are calibrated by the wild bootstrap only")
        outcome = wild_bootstrap_component_pvalue(
            sample, null, kernel,
            BandwidthGrid.single(grid_or_b) if single else grid_or_b,
            B=args.B, seed=args.seed,
        )
    elif method == "WILD":
        outcome = wild_bootstrap_pvalue(
            sample, null, kernel,
            BandwidthGrid.single(grid_or_b) if single else grid_or_b,
            B=args.B, seed=args.seed,
        )
    elif method == "ASYM":
        if single:
            outcome = asym_pvalue_single(sample, null, kernel, grid_or_b)
        else:
            outcome = asym_pvalue_averaged(sample, null, kernel, grid_or_b)
    elif method == "IID":
        outcome = iid_residual_bootstrap_pvalue(sample, null, kernel, grid_or_b,
                                                B=args.B, seed=args.seed)
    else:
        raise CliError(f"unknown method {args.method!r}")

    stat = outcome.statistic
    print(f"statistic ({stat.kind}): {stat.value:.6g}")
    print(f"bandwidths: {', '.join(f'{b:.4g}' for b in stat.bandwidths)}")
    print(f"method: {outcome.method}")
    print(f"p-value: {outcome.p_value:.6g}")
    for key, val in sorted(outcome.diagnostics.items()):
        print(f"  {key}: {val:.6g}" if isinstance(val, float) else f"  {key}: {val}")

    if args.out:
        report = {
            "statistic": {
                "kind": stat.kind,
                "value": stat.value,
                "bandwidths": list(stat.bandwidths),
                "rss_null": list(stat.rss_null_values),
                "rss_alt": list(stat.rss_alt_values),
            },
            "method": outcome.method,
            "p_value": outcome.p_value,
            "B": args.B if outcome.draws is not None else None,
            "seed": args.seed if outcome.draws is not None else None,
            "kernel": args.kernel,
            "null": info,
            "diagnostics": {k: _jsonable(v) for k, v in outcome.diagnostics.items()},
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.draws_out and outcome.draws is not None:
        with open(args.draws_out, "w", encoding="utf-8") as fh:
            fh.write("draw\n")
            for d in outcome.draws:
                fh.write(f"{d:.17g}\n")
    return 0


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _cmd_simulate(args) -> int:
    sample = simulate_scenario(args.scenario, args.n, args.seed)
    t = sample.time_grid
    lines = ["t,y," + ",".join(f"x{j + 1}" for j in range(sample.p))]
    for i in range(sample.n):
        xs = ",".join(f"{v:.17g}" for v in sample.x[i])
        lines.append(f"{t[i]:.17g},{sample.y[i]:.17g},{xs}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_table1(args) -> int:
    methods = tuple(m.strip().upper() for m in args.methods.split(","))
    kinds = tuple(k.strip().lower() for k in args.kinds.split(","))
    scenarios = tuple(s.strip().upper() for s in args.scenarios.split(","))
    bandwidths = tuple(float(b) for b in args.bandwidths.split(","))
    report = run_size_study(
        n_values=(args.n,),
        scenarios=scenarios,
        methods=methods,
        kinds=kinds,
        bandwidths=bandwidths,
        replicates=args.replicates,
        draws=args.B,
        alpha=args.alpha,
        kernel=args.kernel,
        seed=args.seed,
        workers=args.workers,
    )
    sys.stdout.write(report.format_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return 0


def _cmd_power_curve(args) -> int:
    kernel = get_kernel(args.kernel)
    rows = power_ratio_curve(kernel, args.points)
    lines = ["c_min_tilde,c_max_tilde,ratio"]
    for c_min, c_max, ratio in rows:
        lines.append(f"{c_min:.17g},{c_max:.17g},{ratio:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _load_config(path) -> dict:
    """Read ``key = value`` lines; '#' starts a comment."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}: line {lineno}: expected key = value")
                key, val = (part.strip() for part in line.split("=", 1))
                values[key.replace("-", "_")] = val
    except OSError as err:
        raise CliError(f"cannot read config {path}: {err}") from err
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvcspec",
        description="Specification tests for time-varying coefficient regression.",
    )
    parser.add_argument("--version", action="version", version=f"tvcspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a specification test on a CSV sample")
    p_test.add_argument("data", help="CSV with header t,y,x1..xp or y,x1..xp")
    p_test.add_argument("--config", help="key = value config file; flags override it")
    p_test.add_argument("--null", default="zero",
                        help="zero | constant | linear | component:<j>=0")
    p_test.add_argument("--method", default="wild", help="wild | asym | iid")
    p_test.add_argument("--kernel", default="epanechnikov", choices=KERNEL_NAMES)
    p_test.add_argument("--bandwidth", type=float, help="single test bandwidth")
    p_test.add_argument("--grid", help="'auto' or comma-separated bandwidths")
    p_test.add_argument("--B", type=int, default=1000, help="bootstrap draws")
    p_test.add_argument("--seed", type=int, default=0)
    p_test.add_argument("--out", help="write a JSON report here")
    p_test.add_argument("--draws-out", help="write bootstrap draws as one-column CSV")

    p_sim = sub.add_parser("simulate", help="simulate a built-in scenario to CSV")
    p_sim.add_argument("--config", help="key = value config file; flags override it")
    p_sim.add_argument("--scenario", default="A", help="A | B | C | D")
    p_sim.add_argument("--n", type=int, default=400)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", help="output CSV path (default: stdout)")

    p_tab = sub.add_parser("table1", help="reproduce the simulated size table")
    p_tab.add_argument("--config", help="key = value config file; flags override it")
    p_tab.add_argument("--n", type=int, default=400)
    p_tab.add_argument("--replicates", type=int, default=500)
    p_tab.add_argument("--B", type=int, default=1000, help="bootstrap draws")
    p_tab.add_argument("--alpha", type=float, default=0.1)
    p_tab.add_argument("--scenarios", default="A,B,C,D")
    p_tab.add_argument("--methods", default="WILD,ASYM,IID")
    p_tab.add_argument("--kinds", default="averaged,single")
    p_tab.add_argument("--bandwidths", default="0.15,0.25,0.35")
    p_tab.add_argument("--kernel", default="epanechnikov", choices=KERNEL_NAMES)
    p_tab.add_argument("--seed", type=int, default=0)
    p_tab.add_argument("--workers", type=int,
                       default=int(os.environ.get("TVCSPEC_WORKERS", "1")))
    p_tab.add_argument("--out", help="also write rates as CSV here")

    p_pow = sub.add_parser("power-curve", help="emit the averaged-vs-single power ratio curve")
    p_pow.add_argument("--config", help="key = value config file; flags override it")
    p_pow.add_argument("--kernel", default="uniform", choices=KERNEL_NAMES)
    p_pow.add_argument("--points", type=int, default=50)
    p_pow.add_argument("--out", help="output CSV path (default: stdout)")

    return parser


_COMMANDS = {
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "table1": _cmd_table1,
    "power-curve": _cmd_power_curve,
}

_TYPED_KEYS = {
    "n": int, "seed": int, "B": int, "replicates": int, "points": int,
    "workers": int, "bandwidth": float, "alpha": float,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            file_values = _load_config(args.config)
            # flags given on the command line override config entries
            given = {a.lstrip("-").replace("-", "_").split("=")[0]
                     for a in (argv if argv is not None else sys.argv[1:])
                     if a.startswith("--")}
            for key, val in file_values.items():
                if key in given or not hasattr(args, key):
                    continue
                caster = _TYPED_KEYS.get(key, str)
                try:
                    setattr(args, key, caster(val))
                except ValueError:
                    raise CliError(f"config key {key!r}: cannot parse {val!r}") from None
        return _COMMANDS[args.command](args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SingularDesignError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except TvcspecError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
