"""Experiment runner and acceptance entry point.

Config files are flat ``key = value`` sections::

    [experiment]    task, K_grid, seeds, output_dir
    [task]          builder parameters (see ``build_problem``)
    [algorithm.X]   variant, schedule and solver options for algorithm X

Outputs under the output directory: ``traces/<alg>_K<K>_seed<seed>.csv``
per run, ``aggregate.csv``, ``rates.csv`` and ``report.txt``. Floats are
written with 17 significant digits, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import functools
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .glmo import GlmoParams
from .metrics import fit_rate, generalized_fw_gap
from .numerics import ConfigurationError, NoiseSpec
from .problems import (
    additive_composite,
    box,
    cvar,
    l1_ball,
    l1_norm_mean,
    linear_first_component,
    make_cvar_portfolio,
    make_matrix_completion,
    make_minimax_regression,
    make_minimax_regression_from_libsvm,
    make_quadratic_problem,
    max_of_components,
)
from .solver import TRACE_COLUMNS, SolverConfig, run
from .trackers import Schedule

TASKS = ("minimax_regression", "cvar_portfolio", "matrix_completion", "custom_quadratic")
AGGREGATE_COLUMNS = ("algorithm", "K", "n_seeds", "n_failed", "median_min_gap", "mean_min_gap", "se_min_gap")
RATE_COLUMNS = ("algorithm", "slope", "intercept", "r_squared", "n_points", "status")
SEED_ENV = "COMPFW_SEED"


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    task_params: tuple = ()
    algorithms: tuple = ()  # (name, SolverConfig template, record_every or None)
    K_grid: tuple = ()
    seeds: tuple = ()
    output_dir: str = "compfw_out"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigurationError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if not self.algorithms or not self.K_grid or not self.seeds:
            raise ConfigurationError("algorithms, K_grid and seeds must all be nonempty")
        if any(K < 1 for K in self.K_grid):
            raise ConfigurationError("every K in K_grid must be >= 1")
        if any(s < 0 or s >= 2**64 for s in self.seeds):
            raise ConfigurationError("seeds must be unsigned 64-bit integers")
        names = [alg[0] for alg in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigurationError("algorithm names must be unique")

    @property
    def params(self):
        return dict(self.task_params)


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------


def _int_list(text, key):
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError as err:
        raise ConfigurationError(f"{key}: expected integers, got {text!r}") from err


def _float(section, key, default=None):
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError as err:
        raise ConfigurationError(f"{key}: expected a number, got {section[key]!r}") from err


def _algorithm(section):
    kind = section.get("schedule", "nonconvex_constant")
    sched = Schedule(kind, r=_float(section, "r", 2.0), c0=_float(section, "c0", 1.0))
    glmo = GlmoParams(
        inner_budget=int(_float(section, "inner_budget", 200)),
        smoothing_mu=_float(section, "smoothing_mu", 1e-3),
        feas_tol=_float(section, "feas_tol", 1e-9),
    )
    every = section.get("record_every")
    template = SolverConfig(
        variant=section.get("variant", "variant2"),
        schedule=sched,
        K=1,
        glmo_params=glmo,
        clip_C=_float(section, "clip_C"),
    )
    # the template's own record_every was resolved for K=1; keep the user's value apart
    return template, int(every) if every else None


def parse_config(text, source="<config>"):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigurationError(f"{source}: {err}") from err
    if "experiment" not in cp:
        raise ConfigurationError(f"{source}: missing [experiment] section")
    exp = cp["experiment"]
    for key in ("task", "K_grid", "seeds"):
        if key not in exp:
            raise ConfigurationError(f"{source}: [experiment] needs {key}")
    algorithms = tuple(
        (name.split(".", 1)[1], *_algorithm(cp[name])) for name in cp.sections() if name.startswith("algorithm.")
    )
    seeds = _int_list(exp["seeds"], "seeds")
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        seeds = _int_list(env, SEED_ENV)
    task_params = tuple(sorted(cp["task"].items())) if "task" in cp else ()
    return ExperimentConfig(
        task=exp["task"].strip(),
        task_params=task_params,
        algorithms=algorithms,
        K_grid=_int_list(exp["K_grid"], "K_grid"),
        seeds=seeds,
        output_dir=exp.get("output_dir", "compfw_out"),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigurationError(f"cannot read config {path}: {err}") from err
    return parse_config(text, str(path))


# --------------------------------------------------------------------------
# problem construction
# --------------------------------------------------------------------------


def _noise(p, prefix="noise"):
    fam = p.get(f"{prefix}_family")
    if fam is None:
        return None
    tail = p.get(f"{prefix}_tail_index")
    return NoiseSpec(
        fam,
        float(p.get(f"{prefix}_scale", 0.0)),
        tail_index=float(tail) if tail is not None else None,
        moment_order_r=float(p.get(f"{prefix}_r", 2.0)),
    )


def _custom_quadratic(p, rng):
    n, d = int(p.get("n", 3)), int(p.get("d", 5))
    M = rng.standard_normal((n, d, d))
    if p.get("convex", "false").lower() in ("1", "true", "yes"):
        A = M @ M.transpose(0, 2, 1) / d
    else:
        A = 0.5 * (M + M.transpose(0, 2, 1))
    b = rng.standard_normal((n, d))
    c = rng.standard_normal(n)
    radius = float(p.get("tau", 1.0))
    dom_kind = p.get("domain", "l1_ball")
    if dom_kind == "l1_ball":
        dom = l1_ball(d, radius)
    elif dom_kind == "box":
        dom = box(-radius * np.ones(d), radius * np.ones(d))
    else:
        raise ConfigurationError(f"custom_quadratic supports l1_ball or box, not {dom_kind!r}")
    outers = {
        "max_of_components": max_of_components,
        "linear_first_component": linear_first_component,
        "l1_norm_mean": lambda: l1_norm_mean(n),
        "cvar": lambda: cvar(float(p.get("alpha", 0.9)), n),
    }
    kind = p.get("outer", "max_of_components")
    if kind == "additive_composite":
        if n != 1:
            raise ConfigurationError("additive_composite needs n = 1")
        outer = additive_composite()
    elif kind in outers:
        outer = outers[kind]()
    else:
        raise ConfigurationError(f"unknown outer kind {kind!r}")
    return make_quadratic_problem(A, b, c, outer, dom, _noise(p, "noise_f"), _noise(p, "noise_g"), name="custom_quadratic")


@functools.lru_cache(maxsize=8)
def build_problem(task, task_params):
    """Build the problem named by ``task`` from a sorted tuple of string parameters.

    Instance data is drawn from ``data_seed`` (default 0), never from the
    run seeds, so every run of an experiment sees the same instance.
    """
    p = dict(task_params)
    rng = np.random.default_rng(int(p.get("data_seed", 0)))
    try:
        if task == "minimax_regression":
            if "libsvm_path" in p:
                return make_minimax_regression_from_libsvm(
                    p["libsvm_path"], int(p.get("m", 10)), float(p.get("tau", 10.0)), _noise(p), rng
                )
            return make_minimax_regression(
                m=int(p.get("m", 10)),
                d=int(p.get("d", 100)),
                tau=float(p.get("tau", 5.0)),
                samples_per_group=int(p.get("samples_per_group", 50)),
                noise=_noise(p),
                rng=rng,
            )
        if task == "cvar_portfolio":
            return make_cvar_portfolio(
                d=int(p.get("d", 50)), alpha=float(p.get("alpha", 0.95)),
                horizon=int(p.get("horizon", 100)), noise=_noise(p), rng=rng,
            )
        if task == "matrix_completion":
            tau = p.get("tau")
            return make_matrix_completion(
                rows=int(p.get("rows", 30)), cols=int(p.get("cols", 20)), rank=int(p.get("rank", 5)),
                density=float(p.get("density", 0.3)), tau=float(tau) if tau is not None else None,
                noise=_noise(p), rng=rng,
            )
        if task == "custom_quadratic":
            return _custom_quadratic(p, rng)
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigurationError):
            raise
        raise ConfigurationError(f"bad [task] parameter: {err}") from err
    raise ConfigurationError(f"unknown task {task!r}")


# --------------------------------------------------------------------------
# experiment execution
# --------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _run_one(job):
    """Worker: one (algorithm, K, seed) run. Returns trace rows or the error text."""
    task, task_params, template, every, K, seed = job
    try:
        prob = build_problem(task, task_params)
        rec = run(prob, replace(template, K=K, seed=seed, record_every=every))
        rows = [[row[c] for c in TRACE_COLUMNS] for row in rec.rows]
        return rows, rec.summary["min_gap"], None
    except Exception as err:  # noqa: BLE001 - any run failure goes into the report
        return None, np.nan, f"{type(err).__name__}: {err}"


def _aggregate(gaps):
    g = np.asarray([v for v in gaps if np.isfinite(v)], dtype=float)
    if g.size == 0:
        return np.nan, np.nan, np.nan
    se = float(g.std(ddof=1) / math.sqrt(g.size)) if g.size > 1 else 0.0
    return float(np.median(g)), float(g.mean()), se


def run_experiment(config, output_dir=None, jobs=1, echo=None):
    """Execute every (algorithm, K, seed) run and write the CSV outputs.

    Runs may execute in worker processes; results are collected in a fixed
    order and written by this process only, so the files do not depend on
    ``jobs``. Returns a dict with the aggregate rows, rate fits and failures.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    try:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigurationError(f"cannot create output directory {out}: {err}") from err
    # validate the task before spawning workers
    build_problem(config.task, config.task_params)
    jobs_list = [
        (config.task, config.task_params, tmpl, every, K, seed)
        for _, tmpl, every in config.algorithms
        for K in config.K_grid
        for seed in config.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, jobs_list))
    else:
        results = [_run_one(j) for j in jobs_list]

    failures, agg_rows, rate_rows = [], [], []
    it = iter(results)
    for name, _, _ in config.algorithms:
        points = []
        for K in config.K_grid:
            gaps = []
            for seed in config.seeds:
                rows, min_gap, err = next(it)
                if err is not None:
                    failures.append((name, K, seed, err))
                    continue
                path = out / "traces" / f"{name}_K{K}_seed{seed}.csv"
                path.write_text(_csv_text(TRACE_COLUMNS, rows), encoding="utf-8")
                gaps.append(min_gap)
            med, mean, se = _aggregate(gaps)
            agg_rows.append([name, K, len(gaps), len(config.seeds) - len(gaps), med, mean, se])
            if np.isfinite(mean):
                points.append((K, mean))
        rate_rows.append(_rate_row(name, points))
        if echo:
            echo(f"{name}: slope {rate_rows[-1][1]} ({rate_rows[-1][5]})")
    (out / "aggregate.csv").write_text(_csv_text(AGGREGATE_COLUMNS, agg_rows), encoding="utf-8")
    (out / "rates.csv").write_text(_csv_text(RATE_COLUMNS, rate_rows), encoding="utf-8")
    (out / "report.txt").write_text(_report(config, rate_rows, failures), encoding="utf-8")
    return {"aggregate": agg_rows, "rates": rate_rows, "failures": failures}


def _rate_row(name, points):
    positive = [(K, g) for K, g in points if g > 0]
    if len(positive) < 3:
        return [name, "nan", "nan", "nan", len(positive), "too few K values with positive min-gap"]
    fit = fit_rate(positive)
    return [name, _fmt(fit.slope), _fmt(fit.intercept), _fmt(fit.r_squared), len(positive), "ok"]


def _report(config, rate_rows, failures):
    lines = [f"task: {config.task}", f"K_grid: {' '.join(map(str, config.K_grid))}",
             f"seeds: {' '.join(map(str, config.seeds))}", "", "rate fits (ln mean min-gap vs ln K):"]
    for name, slope, _, r2, npts, status in rate_rows:
        lines.append(f"  {name}: slope={slope} r2={r2} points={npts} {status}")
    lines.append("")
    lines.append(f"failed runs: {len(failures)}")
    for name, K, seed, err in failures:
        lines.append(f"  {name} K={K} seed={seed}: {err}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# gap evaluation of a stored point
# --------------------------------------------------------------------------


def read_point(path):
    """One real number per line; blank lines and ``#`` comments are skipped."""
    vals = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise ConfigurationError(f"cannot read point file {path}: {err}") from err
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError as err:
            raise ConfigurationError(f"{path}:{i}: not a number: {line!r}") from err
    return np.array(vals)


def evaluate_gap(config, point):
    prob = build_problem(config.task, config.task_params)
    if point.size != prob.domain.dim:
        raise ConfigurationError(f"point has {point.size} entries, the domain needs {prob.domain.dim}")
    if not prob.domain.contains(point, 1e-8):
        raise ConfigurationError(f"point is infeasible (violation {prob.domain.violation(point):.3g})")
    return prob.objective(point), generalized_fw_gap(prob, point)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="compfw", description="Momentum stochastic Frank-Wolfe experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment grid from a config file")
    r.add_argument("config")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--output", default=None)
    a = sub.add_parser("accept", help="run an acceptance suite")
    a.add_argument("suite", choices=("unit", "lemmas", "rates", "all"))
    a.add_argument("--fast", action="store_true")
    g = sub.add_parser("gap", help="objective and generalized gap at a point")
    g.add_argument("config")
    g.add_argument("point_file")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.jobs < 1:
                raise ConfigurationError("--jobs must be >= 1")
            cfg = load_config(args.config)
            res = run_experiment(cfg, args.output, args.jobs, echo=print)
            if res["failures"]:
                print(f"{len(res['failures'])} run(s) failed; see report.txt", file=sys.stderr)
            return 0
        if args.command == "accept":
            from .acceptance import run_suite

            results = run_suite(args.suite, fast=args.fast)
            return 0 if all(r.passed for r in results) else 1
        cfg = load_config(args.config)
        obj, gap = evaluate_gap(cfg, read_point(args.point_file))
        print(f"objective {_fmt(obj)}")
        print(f"gap {_fmt(gap)}")
        return 0
    except ConfigurationError as err:
        print(f"compfw: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
