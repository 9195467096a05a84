"""Command-line interface.

Subcommands:
  run        single-optimizer benchmark over one or more seeds
  compare    several optimizers on one problem, aggregated mean/std table
  gradcheck  finite-difference validation of a problem's gradient
  trace      print every intermediate of the SOAA update, step by step

Exit codes: 0 success, 1 runtime failure (divergence-free runs that still
fail, gradcheck failures, I/O), 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .core import SOAA, SoaaConfig, TraceStep
from .errors import ConfigError, OptimizerError, UnknownNameError
from .harness import RunSpec, optimizer_names
from .problems import build_problem, gradcheck, problem_names, validate_problem

_HYPER_FLAGS = (
    # (flag, config key, type, soaa-only)
    ("--lr", "alpha", float, False),
    ("--beta1", "beta1", float, False),
    ("--beta2", "beta2", float, False),
    ("--gamma", "gamma", float, True),
    ("--eps", "epsilon", float, False),
    ("--weight-decay", "weight_decay", float, False),
    ("--total-steps", "total_steps", int, True),
)


def _add_run_flags(sp: argparse.ArgumentParser, with_optimizer: bool = True) -> None:
    sp.add_argument("--config", help="JSON config file; flags override its values")
    sp.add_argument("--problem", help=f"problem name: {', '.join(problem_names())}")
    if with_optimizer:
        sp.add_argument("--optimizer", help=f"optimizer name: {', '.join(optimizer_names())}")
    sp.add_argument("--steps", type=int, help="number of optimization steps")
    sp.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    sp.add_argument("--checkpoint-every", type=int, dest="checkpoint_every",
                    help="record a checkpoint every N steps (default: steps//10)")
    sp.add_argument("--out", help="directory for CSV output")
    for flag, key, typ, soaa_only in _HYPER_FLAGS:
        note = " (soaa only)" if soaa_only else ""
        sp.add_argument(flag, dest=key, type=typ, help=f"optimizer {key}{note}")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="soaa",
        description="Benchmark the SOAA optimizer against Adam/AdamW on small problems.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="run one optimizer over one or more seeds")
    _add_run_flags(sp)
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("compare", help="run several optimizers on a shared problem")
    _add_run_flags(sp, with_optimizer=False)
    sp.set_defaults(func=_cmd_compare)

    sp = sub.add_parser("gradcheck", help="check a problem's gradient against finite differences")
    sp.add_argument("--config", help="JSON config file naming the problem")
    sp.add_argument("--problem", help=f"problem name: {', '.join(problem_names())}")
    sp.add_argument("--points", type=int, default=10, help="number of seeded probe points")
    sp.add_argument("--tol", type=float, default=1e-5, help="max acceptable error")
    sp.set_defaults(func=_cmd_gradcheck)

    sp = sub.add_parser("trace", help="print SOAA update intermediates step by step")
    _add_run_flags(sp, with_optimizer=False)
    sp.set_defaults(func=_cmd_trace)

    return p


def _doc_from_args(args) -> dict:
    """Config document = file contents (if any) overlaid with flags."""
    doc = harness.load_config(args.config) if args.config else {}
    if args.problem is not None:
        doc["problem"] = args.problem  # flag names a registry problem, default params
    if getattr(args, "optimizer", None) is not None:
        doc.pop("optimizers", None)
        doc["optimizer"] = args.optimizer
    if args.steps is not None:
        doc["steps"] = args.steps
    if args.seeds is not None:
        try:
            doc["seeds"] = [int(s) for s in str(args.seeds).split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--seeds must be comma-separated integers, got {args.seeds!r}") from None
    if args.checkpoint_every is not None:
        doc["checkpoint_every"] = args.checkpoint_every
    if args.out is not None:
        doc["out"] = args.out
    return doc


def _overlay_hypers(specs: list[RunSpec], args) -> None:
    for spec in specs:
        for _, key, _, soaa_only in _HYPER_FLAGS:
            val = getattr(args, key, None)
            if val is None or (soaa_only and spec.optimizer != "soaa"):
                continue
            spec.optimizer_config = {**spec.optimizer_config, key: val}


def _cmd_run(args) -> int:
    specs = harness.specs_from_config(_doc_from_args(args))
    if len(specs) != 1:
        raise ConfigError("run takes exactly one optimizer; use `compare` for several")
    spec = specs[0]
    _overlay_hypers(specs, args)
    problem = build_problem(spec.problem, **spec.problem_params)
    validate_problem(problem)
    records = [harness.run_single(spec, seed, problem=problem, validate=False)
               for seed in spec.seeds]
    for rec in records:
        if rec.diverged:
            tail = f"diverged after {rec.steps[-1] if rec.steps else 0} recorded steps"
        else:
            tail = f"final loss {rec.losses[-1]:.6e}"
        print(f"{rec.optimizer} on {rec.problem} seed {rec.seed}: {tail}")
    if spec.out is not None:
        outdir = Path(spec.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for rec in records:
            path = harness.write_trajectory_csv(
                outdir / f"{rec.problem}_{rec.optimizer}_seed{rec.seed}.csv", rec)
            print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    specs = harness.specs_from_config(_doc_from_args(args))
    _overlay_hypers(specs, args)
    result = harness.run_compare(specs)
    print(result.table)
    for path in result.csv_paths:
        print(f"wrote {path}")
    return 0


def _cmd_gradcheck(args) -> int:
    doc = harness.load_config(args.config) if args.config else {}
    if args.problem is not None:
        doc["problem"] = args.problem
    name, params = harness._parse_problem_entry(doc.get("problem", "quadratic"))
    problem = build_problem(name, **params)
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(args.points):
        err = gradcheck(problem, rng.standard_normal(problem.dim))
        worst = max(worst, err)
        print(f"point {i}: max error {err:.3e}")
    ok = worst <= args.tol
    print(f"{'PASS' if ok else 'FAIL'}: {problem.name} worst error {worst:.3e} "
          f"(tolerance {args.tol:.1e})")
    return 0 if ok else 1


def _vec(x, limit: int = 8) -> str:
    vals = [repr(float(v)) for v in np.asarray(x).ravel()[:limit]]
    if np.asarray(x).size > limit:
        vals.append(f"... <{np.asarray(x).size} entries>")
    return "[" + ", ".join(vals) + "]"


def _print_trace(rec: TraceStep) -> None:
    print(f"step {rec.t}  loss={rec.loss!r}")
    many = len(rec.g) > 1
    for k in range(len(rec.g)):
        tag = f" group {k}" if many else ""
        print(f" {tag} g        {_vec(rec.g[k])}")
        print(f" {tag} m        {_vec(rec.m[k])}")
        print(f" {tag} s        {_vec(rec.s[k])}")
        print(f" {tag} m_hat    {_vec(rec.m_hat[k])}")
        print(f" {tag} s_hat    {_vec(rec.s_hat[k])}")
        print(f" {tag} fisher_c {rec.fisher_c[k]!r}")
        print(f" {tag} fisher   {_vec(rec.fisher[k])}")
        print(f" {tag} trust    {_vec(rec.trust[k])}")
        print(f" {tag} g_adj    {_vec(rec.g_adj[k])}")
        print(f" {tag} theta    {_vec(rec.theta[k])}")
    if rec.loss is not None:
        lo, hi = rec.dt_bounds
        print(f"  l_avg={rec.l_avg!r} l_hat={rec.l_hat!r} ratio={rec.ratio!r}")
        print(f"  dt_bounds=[{lo!r}, {hi!r}]")
    print(f"  dt {rec.dt_before!r} -> {rec.dt_after!r}")
    print(f"  pr {rec.pr_before!r} -> {rec.pr_after!r}")


def _cmd_trace(args) -> int:
    doc = _doc_from_args(args)
    doc.setdefault("steps", 1)
    doc.setdefault("checkpoint_every", 1)
    specs = harness.specs_from_config(doc)
    spec = specs[0]
    _overlay_hypers(specs, args)
    if spec.optimizer != "soaa":
        raise ConfigError("trace only applies to the soaa optimizer")
    problem = build_problem(spec.problem, **spec.problem_params)
    cfg = harness._config_from(SoaaConfig, dict(spec.optimizer_config))
    if "seeds" in doc:
        theta = np.ascontiguousarray(problem.initial_point(spec.seeds[0]), dtype=np.float64)
        print(f"# {problem.name}, seed {spec.seeds[0]} start")
    else:
        theta = np.ones(problem.dim)
        print(f"# {problem.name}, all-ones start")
    opt = SOAA(theta, cfg)
    for _ in range(spec.steps):
        loss = problem.loss(theta)
        g = problem.grad(theta)
        _print_trace(opt.step_trace(g, loss=loss))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ConfigError, UnknownNameError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OptimizerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
