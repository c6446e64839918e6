"""Command-line entry point ``qp-tongues``.

Exit codes: 0 success, 1 comparison below threshold, 2 configuration error,
3 numerical blow-up in a single run.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import cf_approximants, drive_period, mean_boundaries_array
from .config import load_config
from .core import EpsilonScaled, FixedRatio, ModulationSpec, OscillatorConfig
from .errors import ConfigError, PrecisionExhausted, QPTonguesError, SpecMismatch
from .gridio import fmt, read_grid, write_grid, write_table
from .integrate import NON_FINITE
from .models import ModelKind, QuarterParams, SlowFlowParams
from .stability import ClassifierPolicy, compare_zones, run_point, sweep

EXIT_OK, EXIT_BELOW, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

COMPONENTS = {
    ModelKind.MEAN_FULL: ("x", "v"),
    ModelKind.VARIANCE_FULL: ("V", "dV", "ddV"),
    ModelKind.MOMENTS_ORACLE: ("xx", "pp", "xp"),
    ModelKind.SLOW_FLOW_MEAN_HALF: ("A", "B"),
    ModelKind.SLOW_FLOW_VARIANCE_HALF: ("A", "B", "C"),
    ModelKind.SLOW_FLOW_QUARTER_RES: ("A0", "A", "B"),
}
MAX_ROWS = 20000
NAMED_ALPHAS = {"golden": (math.sqrt(5.0) - 1.0) / 2.0, "silver": math.sqrt(2.0) - 1.0}


def _err(message):
    print(f"error: {message}", file=sys.stderr)


def verdict_line(v) -> str:
    parts = [f"verdict={v.kind.value}", f"max_abs={fmt(v.max_abs)}",
             f"final_envelope={fmt(v.final_envelope)}"]
    if v.growth_rate is not None:
        parts.append(f"growth_rate={fmt(v.growth_rate)}")
    if v.note:
        parts.append(f"note={v.note!r}")
    return " ".join(parts)


def _point_params(kind: ModelKind, a):
    if kind.is_slow:
        return SlowFlowParams.from_delta1(a.delta, a.omega_drive, a.mu, a.delta_cap)
    if kind is ModelKind.SLOW_FLOW_QUARTER_RES:
        return QuarterParams(a.delta, a.epsilon)
    detuning = FixedRatio(a.alpha) if a.alpha is not None else EpsilonScaled(a.delta_cap)
    mod = ModulationSpec(a.omega_drive, a.epsilon, a.mu, detuning)
    if a.omega is not None:
        return OscillatorConfig(a.omega, mod)
    if a.resonance == "quarter":
        return OscillatorConfig.near_quarter(mod, a.epsilon * a.delta)
    return OscillatorConfig.near_half_scaled(mod, a.delta)


def cmd_timeseries(a) -> int:
    try:
        kind = ModelKind(a.model)
        params = _point_params(kind, a)
        policy = ClassifierPolicy.reference() if a.preset == "reference" else ClassifierPolicy.desk()
        policy = replace(policy, bail_out=None)
        if a.h is not None:
            policy = replace(policy, step=a.h)
        if a.horizon is not None:
            policy = replace(policy, slow_horizon=a.horizon, full_horizon=a.horizon)
        n_steps = policy.plan_for(kind).n_steps
        stride = a.stride or max(1, math.ceil(n_steps / MAX_ROWS))
        traj, verdict = run_point(kind, params, policy, record_stride=stride)
    except QPTonguesError as exc:
        _err(exc)
        return EXIT_CONFIG

    states = np.asarray(traj.states)
    envelope = np.maximum.accumulate(np.max(np.abs(states), axis=1)) if len(states) else states
    names = COMPONENTS[kind]
    comments = [
        f"model={kind.value}",
        f"omega_drive={fmt(a.omega_drive)}",
        f"epsilon={fmt(a.epsilon)}",
        f"mu={fmt(a.mu)}",
        f"delta_cap={fmt(a.delta_cap)}",
        f"alpha={fmt(a.alpha)}",
        f"delta={fmt(a.delta)}",
        f"h={fmt(policy.step)}",
        f"horizon={fmt(policy.horizon_for(kind))}",
        f"status={traj.status}",
        verdict_line(verdict),
    ]
    if isinstance(params, OscillatorConfig):
        comments.insert(1, f"omega={fmt(params.omega)}")
    rows = [(t, *s, e) for t, s, e in zip(traj.times, states, envelope)]
    write_table(a.out, ("t", *names, "envelope"), rows, comments)
    print(verdict_line(verdict))
    return EXIT_BLOWUP if traj.status == NON_FINITE else EXIT_OK


def cmd_sweep(a) -> int:
    try:
        cfg = load_config(a.config, a.set)
    except ConfigError as exc:
        _err(exc)
        return EXIT_CONFIG
    workers = a.workers or cfg.workers
    out_dir = a.out_dir or cfg.out_dir
    if out_dir is None:
        _err("no output directory (use --out-dir or out_dir in the config)")
        return EXIT_CONFIG
    for entry in cfg.sweeps:
        result = sweep(entry.spec, cfg.policy, workers=workers)
        paths = write_grid(result, out_dir, entry.name)
        kinds = result.kinds()
        counts = {k: int((kinds == k).sum()) for k in ("stable", "divergent", "ambiguous")}
        print(f"{entry.name}: {paths['csv']} " + " ".join(f"{k}={n}" for k, n in counts.items()))
    return EXIT_OK


def cmd_compare(a) -> int:
    try:
        ga = read_grid(a.grid_a)
        gb = read_grid(a.grid_b)
        cmp = compare_zones(ga, gb)
    except (ConfigError, SpecMismatch) as exc:
        _err(exc)
        return EXIT_CONFIG
    path_a, path_b = Path(a.grid_a), Path(a.grid_b)
    out = a.out or path_a.with_name(f"{path_a.stem}_vs_{path_b.stem}_disagreements.csv")
    rows = [(c.ix, c.iy, c.x, c.y, c.a, c.b) for c in cmp.disagreement_cells]
    write_table(out, ("ix", "iy", "x", "y", "verdict_a", "verdict_b"), rows,
                [f"a={path_a}", f"b={path_b}", f"agreement={fmt(cmp.agreement)}"])
    print(f"agreement={fmt(cmp.agreement)} compared={cmp.compared} "
          f"disagreements={len(cmp.disagreement_cells)}")
    ok = cmp.agreement >= a.threshold  # NaN (nothing comparable) fails
    return EXIT_OK if ok else EXIT_BELOW


def cmd_boundary(a) -> int:
    lo, hi = a.delta_cap_min, a.delta_cap_max
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        _err("need finite delta-cap-min <= delta-cap-max")
        return EXIT_CONFIG
    if a.mu < 0 or not math.isfinite(a.mu):
        _err("mu must be finite and >= 0")
        return EXIT_CONFIG
    if a.samples < 1 or (hi > lo and a.samples < 2):
        _err("samples must be >= 2 for a nonzero range")
        return EXIT_CONFIG
    caps = np.array([lo]) if hi == lo else np.linspace(lo, hi, a.samples)
    branches = mean_boundaries_array(a.mu, caps)
    rows = [(c, *branches[:, i], *(a.omega_drive * branches[:, i])) for i, c in enumerate(caps)]
    cols = ("Delta", "branch1", "branch2", "branch3", "branch4",
            "delta1_1", "delta1_2", "delta1_3", "delta1_4")
    write_table(a.out, cols, rows,
                [f"mu={fmt(a.mu)}", f"omega_drive={fmt(a.omega_drive)}",
                 "branch columns are delta1/Omega; delta1 columns are Omega*branch"])
    print(f"wrote {len(rows)} rows to {a.out}")
    return EXIT_OK


def _parse_alpha(text):
    if text in NAMED_ALPHAS:
        return NAMED_ALPHAS[text]
    return float(text)


def cmd_approximants(a) -> int:
    try:
        alpha = _parse_alpha(a.alpha)
        conv = cf_approximants(alpha, a.count)
    except PrecisionExhausted as exc:
        _err(exc)
        for r in exc.convergents:
            print(f"  reliable: {r}", file=sys.stderr)
        return EXIT_CONFIG
    except (QPTonguesError, ValueError) as exc:
        _err(exc)
        return EXIT_CONFIG
    rows = []
    for r in conv:
        period = drive_period(r, a.omega_drive)
        base = a.omega_drive / (2 * r.q)
        rows.append((str(r), r.p, r.q, period, base))
        print(f"{r}  period={2 * r.q}pi/Omega={fmt(period)}  base_frequency=Omega/{2 * r.q}={fmt(base)}")
    if a.out:
        write_table(a.out, ("approximant", "p", "q", "period", "base_frequency"), rows,
                    [f"alpha={fmt(alpha)}", f"omega_drive={fmt(a.omega_drive)}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qp-tongues", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("timeseries", help="integrate one parameter point and write a CSV")
    t.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    t.add_argument("--omega-drive", type=float, default=2 * math.pi)
    t.add_argument("--epsilon", type=float, default=0.0)
    t.add_argument("--mu", type=float, default=0.0)
    t.add_argument("--delta-cap", type=float, default=0.0)
    t.add_argument("--delta", type=float, default=0.0,
                   help="first-order detuning delta1: omega = Omega/2 + epsilon*delta")
    t.add_argument("--alpha", type=float, default=None, help="fixed frequency ratio (full models)")
    t.add_argument("--omega", type=float, default=None, help="natural frequency, overrides --delta")
    t.add_argument("--resonance", choices=("half", "quarter"), default="half")
    t.add_argument("--preset", choices=("reference", "desk"), default="reference")
    t.add_argument("--h", type=float, default=None)
    t.add_argument("--horizon", type=float, default=None)
    t.add_argument("--stride", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_timeseries)

    s = sub.add_parser("sweep", help="classify a parameter grid from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out-dir", default=None)
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. policy.step=0.005 or mu=0.5")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="agreement of two grids")
    c.add_argument("grid_a")
    c.add_argument("grid_b")
    c.add_argument("--threshold", type=float, default=0.98)
    c.add_argument("--out", default=None, help="disagreement CSV path")
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("boundary", help="closed-form mean-flow boundaries over a Delta range")
    b.add_argument("--mu", type=float, required=True)
    b.add_argument("--delta-cap-min", type=float, required=True)
    b.add_argument("--delta-cap-max", type=float, required=True)
    b.add_argument("--samples", type=int, default=201)
    b.add_argument("--omega-drive", type=float, default=2 * math.pi)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_boundary)

    ap = sub.add_parser("approximants", help="continued-fraction approximants of alpha")
    ap.add_argument("--alpha", required=True, help="a number in (0, 1), or 'golden' / 'silver'")
    ap.add_argument("--count", type=int, required=True)
    ap.add_argument("--omega-drive", type=float, default=2 * math.pi)
    ap.add_argument("--out", default=None)
    ap.set_defaults(func=cmd_approximants)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
