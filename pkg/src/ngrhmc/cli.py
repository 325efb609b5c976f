"""Command-line front end.

Subcommands
-----------
run CONFIG         sample and write samples.csv / report.json (and optional logs)
validate CONFIG    check a config without running it
demo NAME          regenerate the data behind a figure or table (fig1, fig2, toy-table)
list-examples      print the catalog

Exit codes: 0 success, 1 configuration error, 2 sampler failure.
The worker count comes from ``--workers`` or the ``NGRHMC_WORKERS`` variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .catalog import Gaussian, build_example, example_names
from .config import ConfigError, RunConfig, load_config
from .constraints import L1Norm, L2Norm, Linear
from .demos import DEMOS, fig1_demo, fig2_demo, toy_table
from .diagnostics import combined_se, summarize
from .errors import ChainFailures, NGRHMCError, UnknownDemo, UnknownExample
from .sampler import SamplerConfig, check_feasible, default_workers, feasible_search, run_chains

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _clean(obj):
    """Replace non-finite floats by ``None`` so the report stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# config -> sampler inputs
# --------------------------------------------------------------------------

def build_constraint(spec):
    if spec.type == "linear":
        return Linear(spec.a, spec.b)
    if spec.type == "l1":
        return L1Norm(spec.A, spec.b, spec.v)
    return L2Norm(spec.A, spec.b, spec.v)


def build_problem(cfg: RunConfig):
    """``(model, constraints, q0, SamplerConfig)`` for a validated config.

    Raises :class:`ConfigError` for problems only visible after building
    the model (unknown catalog name, dimension mismatches).
    """
    if isinstance(cfg.model, str):
        try:
            ex = build_example(cfg.model)
        except UnknownExample as exc:
            raise ConfigError([f"model: {exc}"]) from None
        model, constraints, q_cat = ex.model, list(ex.constraints), ex.q0
    else:
        g = Gaussian(cfg.model.mean, cfg.model.cov)
        model, constraints, q_cat = g.model(), [], np.asarray(cfg.model.mean, dtype=float)
    d = model.dim
    if cfg.constraints is not None:
        constraints = [build_constraint(s) for s in cfg.constraints]
    errs = [
        f"constraints.{i}: dimension {c.dim} does not match model dimension {d}"
        for i, c in enumerate(constraints)
        if c.dim != d
    ]
    st = cfg.start
    for name, v in (("start.q0", st.q0), ("start.center", st.center)):
        if v is not None and len(v) != d:
            errs.append(f"{name}: length {len(v)} does not match model dimension {d}")
    if errs:
        raise ConfigError(errs)

    s = cfg.sampler
    scfg = SamplerConfig(
        T=s.T,
        burn_in_fraction=s.burn_in_fraction,
        N=s.N,
        lam=s.lam,
        kernel=s.kernel,
        ctrl=s.step.build(),
        seed=s.seed,
        chains=s.chains,
        refresh=s.refresh,
        adapt=s.adapt,
        init_scale=s.init_scale,
        max_events_per_unit_time=s.max_events_per_unit_time,
        record_events=True,
        record_positions=cfg.output.event_log,
        trace_stride=cfg.output.trace_stride if cfg.output.dense_trace else 0,
        n_batches=s.n_batches,
    )
    if st.mode == "given":
        q0 = np.asarray(st.q0, dtype=float)
    elif st.mode == "catalog":
        q0 = np.asarray(q_cat, dtype=float)
    else:
        center = np.asarray(st.center if st.center is not None else q_cat, dtype=float)
        rng = np.random.default_rng([s.seed, 0xFEA5])
        q0 = feasible_search(constraints, center, st.scale * np.ones(d), rng, st.max_tries)
    return model, constraints, q0, scfg


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

def build_report(cfg: RunConfig, model, constraints, q0, outputs, wall_total: float) -> dict:
    d = model.dim
    names = [f"q{i + 1}" for i in range(d)]
    M = len(outputs)
    coords = []
    timing_stats = []
    wall_sampling = float(sum(o.wall_sampling for o in outputs))
    for i, name in enumerate(names):
        cs = summarize(name, [o.samples[:, i] for o in outputs], wall_sampling)
        entry = cs.as_dict()
        entry.pop("ess_per_sec")
        entry["time_mean"] = float(np.mean([o.time_mean[i] for o in outputs]))
        entry["time_mean_se"] = combined_se([o.time_mean_se[i] for o in outputs])
        entry["time_var"] = float(np.mean([o.time_var[i] for o in outputs]))
        entry["time_var_se"] = combined_se([o.time_var_se[i] for o in outputs])
        coords.append(entry)
        timing_stats.append({"name": name, "ess_per_sec": cs.ess_per_sec})
    monitors = []
    for k, mname in enumerate(outputs[0].monitor_names):
        monitors.append(
            {
                "name": mname,
                "time_average": float(np.mean([o.time_averages[k] for o in outputs])),
                "se": combined_se([o.time_averages_se[k] for o in outputs]),
            }
        )
    per_chain = []
    for o in outputs:
        per_chain.append(
            {
                "chain": o.chain,
                "time_mean": o.time_mean,
                "time_var": o.time_var,
                "time_mean_se": o.time_mean_se,
                "time_var_se": o.time_var_se,
                "time_averages": o.time_averages,
                "stats": o.stats,
                "standardization": {"m": o.standardization.m, "S": o.standardization.S},
            }
        )
    events = {}
    for o in outputs:
        for k, v in o.stats.items():
            if k.removeprefix("burn_in_").startswith(("collisions", "refreshes")):
                events[k] = events.get(k, 0) + int(v)
    return {
        "schema_version": cfg.schema_version,
        "config": cfg.echo(),
        "seed": cfg.sampler.seed,
        "model": cfg.model if isinstance(cfg.model, str) else "inline-gaussian",
        "dim": d,
        "chains": M,
        "q0": q0,
        "constraints": [c.describe() for c in constraints],
        "coordinates": coords,
        "monitors": monitors,
        "events": dict(sorted(events.items())),
        "per_chain": per_chain,
        "timing": {
            "wall_total": wall_total,
            "wall_burn_in": [o.wall_burn_in for o in outputs],
            "wall_sampling": [o.wall_sampling for o in outputs],
            "ess_per_sec": timing_stats,
        },
    }


def write_samples(path: Path, outputs, d: int) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "index"] + [f"q{i + 1}" for i in range(d)])
        for o in outputs:
            for s, row in enumerate(o.samples):
                w.writerow([o.chain, s] + [fmt(x) for x in row])


def write_events(path: Path, outputs, d: int) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "time", "kind", "constraint", "phase"] + [f"q{i + 1}" for i in range(d)])
        for o in outputs:
            for e in o.events:
                pos = [fmt(x) for x in e.position] if e.position is not None else [""] * d
                w.writerow([o.chain, fmt(e.time), e.kind, e.constraint, e.phase] + pos)


def write_trace(path: Path, outputs, d: int) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "time"] + [f"q{i + 1}" for i in range(d)])
        for o in outputs:
            if o.trace is None:
                continue
            for row in o.trace:
                w.writerow([o.chain] + [fmt(x) for x in row])


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        build_problem(cfg)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NGRHMCError as exc:
        _err(exc.diagnostic())
        return EXIT_RUNTIME
    print(f"{args.config}: ok")
    return EXIT_OK


def execute(cfg: RunConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None) -> dict:
    """Run a validated config and write its outputs; returns the report."""
    model, constraints, q0, scfg = build_problem(cfg)
    check_feasible(constraints, q0)
    t0 = time.perf_counter()
    outputs = run_chains(model, constraints, scfg, q0, workers=workers)
    wall = time.perf_counter() - t0
    out = Path(out_dir or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    d = model.dim
    report = build_report(cfg, model, constraints, q0, outputs, wall)
    if "csv" in cfg.output.formats:
        write_samples(out / "samples.csv", outputs, d)
        if cfg.output.event_log:
            write_events(out / "events.csv", outputs, d)
        if cfg.output.dense_trace:
            write_trace(out / "trace.csv", outputs, d)
    if "json" in cfg.output.formats:
        write_json(out / "report.json", report)
    return report


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        report = execute(cfg, Path(args.out) if args.out else None, args.workers)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except ChainFailures as exc:
        for i, e in sorted(exc.errors.items()):
            _err(f"chain {i}: {e.diagnostic()}")
        return EXIT_RUNTIME
    except NGRHMCError as exc:
        _err(exc.diagnostic())
        return EXIT_RUNTIME
    for c in report["coordinates"]:
        print(
            f"{c['name']}: mean {c['time_mean']:.6g} (se {c['time_mean_se']:.2g}) "
            f"var {c['time_var']:.6g} ess {c['ess']:.0f} rhat {c['rhat']:.4f}"
        )
    return EXIT_OK


def cmd_list(args) -> int:
    for name in example_names():
        ex = build_example(name)
        print(f"{name:26s} d={ex.dim:<3d} constraints={len(ex.constraints):<2d} {ex.description}")
    return EXIT_OK


def demo_fig1(out: Path, seeds: Sequence[int]) -> dict:
    res = fig1_demo(seeds)
    summary = {}
    for kind, logs in (("deterministic", res.deterministic), ("randomized", res.randomized)):
        with (out / f"fig1_{kind}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "collision", "time", "q1", "q2"])
            for log in logs:
                for k, (t, p) in enumerate(zip(log.times, log.positions)):
                    w.writerow([log.seed, k + 1, fmt(t), fmt(p[0]), fmt(p[1])])
        summary[kind] = [
            {"seed": g.seed, "collisions": g.n, "last_time": float(g.times[-1]),
             "median_gap": g.median_gap, "gap_trend": g.trend()}
            for g in logs
        ]
    summary["median_gap_ratio"] = res.gap_ratios().tolist()
    return summary


def demo_fig2(out: Path, T: float, chains: int, seed: int, workers) -> dict:
    res = fig2_demo(T=T, chains=chains, seed=seed, workers=workers)
    summary = {}
    for panel, outs in res.items():
        write_samples(out / f"fig2_{panel}.csv", outs, 2)
        summary[panel] = {
            "time_mean": np.mean([o.time_mean for o in outs], axis=0),
            "time_var": np.mean([o.time_var for o in outs], axis=0),
        }
    return summary


def demo_toy(out: Path, T: float, chains: int, seed: int, workers) -> dict:
    tab = toy_table(chains=chains, T=T, seed=seed, workers=workers)
    cols = ["model", "method", "parameter", "ess", "ess_per_sec", "mcsd_d", "mcsd_c",
            "mean_d", "mean_c", "se_d", "se_c"]
    with (out / "toy_table.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in tab.rows:
            d = r.as_dict()
            w.writerow([d[c] if isinstance(d[c], str) else fmt(d[c]) for c in cols])
    return {
        "d_vs_c": {f"{r.model}/{r.method}/{r.parameter}": r.d_vs_c() for r in tab.rows},
        "methods_agree": {m: tab.methods_agree(m) for m in {r.model for r in tab.rows}},
    }


def cmd_demo(args) -> int:
    try:
        if args.name not in DEMOS:
            raise UnknownDemo(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.name == "fig1":
            summary = demo_fig1(out, args.seeds)
        elif args.name == "fig2":
            summary = demo_fig2(out, args.T or 10_000.0, args.chains or 1, args.seed, args.workers)
        else:
            summary = demo_toy(out, args.T or 10_000.0, args.chains or 10, args.seed, args.workers)
    except UnknownDemo as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NGRHMCError as exc:
        _err(exc.diagnostic())
        return EXIT_RUNTIME
    write_json(out / f"{args.name}_summary.json", summary)
    print(json.dumps(_clean(summary), indent=2, sort_keys=True))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ngrhmc", description="Constrained-domain NGRHMC sampler")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.add_argument("--workers", type=int, default=None, help="parallel chains (default: NGRHMC_WORKERS or 1)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config without running")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    dm = sub.add_parser("demo", help="regenerate figure/table data")
    dm.add_argument("name", help="fig1, fig2 or toy-table")
    dm.add_argument("--out", default="demo-out")
    dm.add_argument("--T", type=float, default=None, help="total process time per trajectory")
    dm.add_argument("--chains", type=int, default=None)
    dm.add_argument("--seed", type=int, default=0)
    dm.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3], help="fig1 seeds")
    dm.add_argument("--workers", type=int, default=None)
    dm.set_defaults(func=cmd_demo)

    ls = sub.add_parser("list-examples", help="print the example catalog")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    if getattr(args, "workers", None) is None and hasattr(args, "workers"):
        args.workers = default_workers()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
