"""Benchmark harness: seeded multi-run comparisons with CSV output.

A :class:`RunSpec` names a problem and an optimizer; :func:`run_single`
executes the training loop for one seed and records checkpoints;
:func:`run_compare` runs several specs over a shared problem and seed
list and aggregates the losses into per-checkpoint mean/std.

Everything except wall-clock time is deterministic: the same spec and
seed produce bit-identical loss/dt/grad-norm trajectories.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import Adam, AdamConfig
from .core import SOAA, SoaaConfig
from .errors import ConfigError, UnknownNameError
from .problems import Problem, build_problem, validate_problem

TRAJECTORY_HEADER = ("optimizer", "problem", "seed", "step", "loss", "dt", "grad_norm", "wall_ms")
SUMMARY_HEADER = ("problem", "optimizer", "checkpoint_step", "mean_loss", "std_loss", "diverged_count")


# -- optimizer registry -----------------------------------------------------

def _config_from(cls, overrides: dict):
    try:
        return cls(**overrides)
    except TypeError:
        valid = ", ".join(f.name for f in fields(cls))
        raise ConfigError(
            f"invalid config keys {sorted(overrides)} for {cls.__name__}; valid keys: {valid}"
        ) from None


def _make_soaa(theta, overrides: dict, steps: int):
    overrides.setdefault("total_steps", steps)
    return SOAA(theta, _config_from(SoaaConfig, overrides))


def _make_adam(theta, overrides: dict, decoupled: bool, default_weight_decay: float):
    if "decoupled" in overrides:
        raise ConfigError("weight-decay style is selected by the optimizer name (adam vs adamw)")
    overrides.setdefault("weight_decay", default_weight_decay)
    return Adam(theta, _config_from(AdamConfig, {"decoupled": decoupled, **overrides}))


OPTIMIZERS = {
    "soaa": lambda theta, cfg, steps: _make_soaa(theta, cfg, steps),
    "adam": lambda theta, cfg, steps: _make_adam(theta, cfg, decoupled=False, default_weight_decay=0.0),
    "adamw": lambda theta, cfg, steps: _make_adam(theta, cfg, decoupled=True, default_weight_decay=0.01),
}


def optimizer_names() -> list[str]:
    return sorted(OPTIMIZERS)


def make_optimizer(name: str, theta, config: dict | None = None, steps: int = 1):
    """Build a registered optimizer over theta. steps seeds SOAA's horizon."""
    try:
        factory = OPTIMIZERS[name]
    except KeyError:
        raise UnknownNameError(
            f"unknown optimizer {name!r}: known optimizers are {', '.join(optimizer_names())}"
        ) from None
    return factory(theta, dict(config or {}), steps)


# -- run bookkeeping ---------------------------------------------------------

@dataclass
class RunSpec:
    """One benchmark configuration, fanned out over its seed list."""

    problem: str
    optimizer: str
    steps: int
    seeds: list[int]
    problem_params: dict = field(default_factory=dict)
    optimizer_config: dict = field(default_factory=dict)
    checkpoint_every: int | None = None
    out: str | Path | None = None

    def __post_init__(self):
        try:
            self.steps = int(self.steps)
            self.seeds = [int(s) for s in self.seeds]
        except (TypeError, ValueError):
            raise ConfigError("steps must be an integer and seeds a list of integers") from None
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.checkpoint_every is None:
            self.checkpoint_every = max(1, self.steps // 10)
        self.checkpoint_every = int(self.checkpoint_every)
        if not 1 <= self.checkpoint_every <= self.steps:
            raise ConfigError(
                f"checkpoint_every must be in [1, steps], got {self.checkpoint_every}"
            )


def checkpoint_steps(steps: int, every: int) -> list[int]:
    """Multiples of `every` up to `steps`, always including the final step."""
    pts = list(range(every, steps + 1, every))
    if not pts or pts[-1] != steps:
        pts.append(steps)
    return pts


@dataclass
class RunRecord:
    """Checkpoint trajectory of one (spec, seed) run.

    ``dts`` holds None for optimizers without a trust-region scalar; the
    CSV writes those as empty cells. ``diverged`` means the loss or
    gradient went non-finite and the run stopped early, keeping the
    checkpoints recorded so far.
    """

    optimizer: str
    problem: str
    seed: int
    steps: list[int]
    losses: list[float]
    dts: list[float | None]
    grad_norms: list[float]
    wall_ms: list[float]
    diverged: bool = False

    def payload_rows(self) -> list[tuple]:
        """(step, loss, dt, grad_norm) rows — the deterministic part.

        Wall time is the one column two identical runs won't share.
        """
        return list(zip(self.steps, self.losses, self.dts, self.grad_norms))


def run_single(
    spec: RunSpec,
    seed: int,
    problem: Problem | None = None,
    validate: bool = True,
) -> RunRecord:
    """Run one seed of a spec: loss/grad, optimizer step, checkpoint rows.

    The loss recorded at checkpoint t is the loss at the pre-step
    parameters of step t; dt is the trust-region scalar after that step.
    Pass a pre-built problem (and validate=False) to share the gradcheck
    gate across seeds, as run_compare does.
    """
    if problem is None:
        problem = build_problem(spec.problem, **spec.problem_params)
    if validate:
        validate_problem(problem)
    seed = int(seed)
    theta = np.ascontiguousarray(problem.initial_point(seed), dtype=np.float64)
    opt = make_optimizer(spec.optimizer, theta, spec.optimizer_config, spec.steps)
    track_dt = isinstance(opt, SOAA)
    marks = set(checkpoint_steps(spec.steps, spec.checkpoint_every))
    rec = RunRecord(spec.optimizer, problem.name, seed, [], [], [], [], [])
    start = time.perf_counter()
    for t in range(1, spec.steps + 1):
        loss = problem.loss(theta)
        g = problem.grad(theta)
        if not (math.isfinite(loss) and np.isfinite(g).all()):
            rec.diverged = True
            break
        opt.step(g, loss=loss)
        if t in marks:
            rec.steps.append(t)
            rec.losses.append(float(loss))
            rec.dts.append(float(opt.state.dt) if track_dt else None)
            rec.grad_norms.append(float(np.linalg.norm(g)))
            rec.wall_ms.append((time.perf_counter() - start) * 1e3)
    return rec


# -- aggregation -------------------------------------------------------------

@dataclass
class SummaryStats:
    """Per-checkpoint loss mean/std across the non-diverged seeds of one spec."""

    problem: str
    optimizer: str
    checkpoint_steps: list[int]
    mean_loss: list[float]
    std_loss: list[float]
    final_mean: float
    final_std: float
    diverged_count: int


def aggregate(records: list[RunRecord]) -> SummaryStats:
    """Population mean/std (ddof=0) over non-diverged runs, per checkpoint.

    Diverged runs are excluded from the statistics and reported as a
    count. With every run diverged the per-checkpoint lists are empty and
    the final mean/std are NaN.
    """
    if not records:
        raise ConfigError("aggregate needs at least one record")
    live = [r for r in records if not r.diverged]
    if live:
        steps = list(live[0].steps)
        losses = np.array([r.losses for r in live], dtype=np.float64)
        means = [float(v) for v in losses.mean(axis=0)]
        stds = [float(v) for v in losses.std(axis=0)]
    else:
        steps, means, stds = [], [], []
    return SummaryStats(
        problem=records[0].problem,
        optimizer=records[0].optimizer,
        checkpoint_steps=steps,
        mean_loss=means,
        std_loss=stds,
        final_mean=means[-1] if means else math.nan,
        final_std=stds[-1] if stds else math.nan,
        diverged_count=len(records) - len(live),
    )


@dataclass
class CompareResult:
    stats: list[SummaryStats]
    records: list[list[RunRecord]]
    table: str
    csv_paths: list[Path]


def format_table(stats: list[SummaryStats]) -> str:
    """Side-by-side mean±std per checkpoint, one column per optimizer."""
    steps = next((st.checkpoint_steps for st in stats if st.checkpoint_steps), [])
    header = ["step"] + [st.optimizer for st in stats]
    rows = []
    for i, step in enumerate(steps):
        row = [str(step)]
        for st in stats:
            if i < len(st.mean_loss):
                row.append(f"{st.mean_loss[i]:.6e} +/- {st.std_loss[i]:.1e}")
            else:
                row.append("-")
        rows.append(row)
    rows.append(["diverged"] + [str(st.diverged_count) for st in stats])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
             for r in [header] + rows]
    return "\n".join(lines)


def run_compare(specs: list[RunSpec]) -> CompareResult:
    """Run every spec over the shared problem/seeds and aggregate.

    All specs must agree on problem (name and parameters), seed list,
    steps and checkpoint_every, so every optimizer sees identical initial
    points and the table lines up checkpoint-for-checkpoint. CSVs are
    written when the first spec carries an output path: one trajectory
    file per run plus one summary file.
    """
    if not specs:
        raise ConfigError("run_compare needs at least one spec")
    first = specs[0]
    for sp in specs[1:]:
        if sp.problem != first.problem or sp.problem_params != first.problem_params:
            raise ConfigError("all compare specs must share the same problem and parameters")
        if sp.seeds != first.seeds:
            raise ConfigError("all compare specs must share the same seed list")
        if sp.steps != first.steps or sp.checkpoint_every != first.checkpoint_every:
            raise ConfigError("all compare specs must share steps and checkpoint_every")
    problem = build_problem(first.problem, **first.problem_params)
    validate_problem(problem)
    records = [
        [run_single(sp, seed, problem=problem, validate=False) for seed in sp.seeds]
        for sp in specs
    ]
    stats = [aggregate(recs) for recs in records]
    csv_paths: list[Path] = []
    if first.out is not None:
        outdir = Path(first.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for recs in records:
            for rec in recs:
                path = outdir / f"{rec.problem}_{rec.optimizer}_seed{rec.seed}.csv"
                csv_paths.append(write_trajectory_csv(path, rec))
        csv_paths.append(write_summary_csv(outdir / f"{problem.name}_summary.csv", stats))
    return CompareResult(stats=stats, records=records, table=format_table(stats), csv_paths=csv_paths)


# -- CSV ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    # repr of a Python float round-trips the exact 64-bit value.
    return repr(float(x))


def write_trajectory_csv(path, rec: RunRecord) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for step, loss, dt, grad_norm, wall in zip(
            rec.steps, rec.losses, rec.dts, rec.grad_norms, rec.wall_ms
        ):
            w.writerow([
                rec.optimizer, rec.problem, rec.seed, step,
                _fmt(loss), "" if dt is None else _fmt(dt), _fmt(grad_norm), _fmt(wall),
            ])
    return path


def read_trajectory_csv(path) -> RunRecord:
    """Parse a trajectory CSV back into a RunRecord (diverged flag is not
    stored in the file, so it comes back False)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TRAJECTORY_HEADER:
            raise ConfigError(f"{path}: unexpected trajectory header {header}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{path}: trajectory has no data rows")
    rec = RunRecord(rows[0][0], rows[0][1], int(rows[0][2]), [], [], [], [], [])
    for row in rows:
        rec.steps.append(int(row[3]))
        rec.losses.append(float(row[4]))
        rec.dts.append(None if row[5] == "" else float(row[5]))
        rec.grad_norms.append(float(row[6]))
        rec.wall_ms.append(float(row[7]))
    return rec


def write_summary_csv(path, stats: list[SummaryStats]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for st in stats:
            for step, mean, std in zip(st.checkpoint_steps, st.mean_loss, st.std_loss):
                w.writerow([st.problem, st.optimizer, step, _fmt(mean), _fmt(std), st.diverged_count])
    return path


def read_summary_csv(path) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_HEADER:
            raise ConfigError(f"{path}: unexpected summary header {reader.fieldnames}")
        return [
            {
                "problem": row["problem"],
                "optimizer": row["optimizer"],
                "checkpoint_step": int(row["checkpoint_step"]),
                "mean_loss": float(row["mean_loss"]),
                "std_loss": float(row["std_loss"]),
                "diverged_count": int(row["diverged_count"]),
            }
            for row in reader
        ]


# -- config files ------------------------------------------------------------

_TOP_KEYS = {"problem", "steps", "seeds", "checkpoint_every", "out", "optimizer", "optimizers"}


def load_config(path) -> dict:
    """Read a JSON config document (see specs_from_config for the schema)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return doc


def _parse_problem_entry(entry) -> tuple[str, dict]:
    if isinstance(entry, str):
        return entry, {}
    if isinstance(entry, dict):
        unknown = set(entry) - {"name", "params"}
        if unknown:
            raise ConfigError(f"unknown problem keys: {sorted(unknown)}")
        name = entry.get("name")
        if not isinstance(name, str):
            raise ConfigError("problem.name must be a string")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("problem.params must be an object")
        return name, dict(params)
    raise ConfigError("problem must be a name or an object with name/params")


def _parse_optimizer_entry(entry) -> tuple[str, dict]:
    if isinstance(entry, str):
        return entry, {}
    if isinstance(entry, dict):
        unknown = set(entry) - {"name", "config"}
        if unknown:
            raise ConfigError(f"unknown optimizer keys: {sorted(unknown)}")
        name = entry.get("name")
        if not isinstance(name, str):
            raise ConfigError("optimizer.name must be a string")
        config = entry.get("config", {})
        if not isinstance(config, dict):
            raise ConfigError("optimizer.config must be an object")
        return name, dict(config)
    raise ConfigError("optimizer must be a name or an object with name/config")


def specs_from_config(doc: dict) -> list[RunSpec]:
    """Expand a config document into one RunSpec per optimizer entry.

    Schema (all keys optional)::

        {
          "problem": "quadratic" | {"name": ..., "params": {...}},
          "steps": 100,
          "seeds": [0, 1, 2],
          "checkpoint_every": 10,
          "out": "results",
          "optimizer": "soaa" | {"name": ..., "config": {...}},   # single run
          "optimizers": [ ...same shape..., ... ]                 # comparison
        }
    """
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "optimizer" in doc and "optimizers" in doc:
        raise ConfigError("give either 'optimizer' or 'optimizers', not both")
    problem, problem_params = _parse_problem_entry(doc.get("problem", "quadratic"))
    entries = doc.get("optimizers", [doc.get("optimizer", "soaa")])
    if not isinstance(entries, list) or not entries:
        raise ConfigError("optimizers must be a non-empty list")
    return [
        RunSpec(
            problem=problem,
            optimizer=name,
            steps=doc.get("steps", 100),
            seeds=list(doc.get("seeds", [0])),
            problem_params=problem_params,
            optimizer_config=config,
            checkpoint_every=doc.get("checkpoint_every"),
            out=doc.get("out"),
        )
        for name, config in map(_parse_optimizer_entry, entries)
    ]
