"""Command-line front end: single runs and benchmark sweeps.

    mapf-ir --map random-32-32-20 --agents 110 --seed 0 --budget-ms 90000 \
            --out-solution sol.txt --out-trace trace.csv
    mapf-ir --sweep sweep.cfg
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

from .graph import Grid, bundled_map, load_map
from .instance import Instance, load_scen, parse_plain, random_instance
from .plan import Solution, format_solution, validate
from .refine import (
    INIT_SOLVERS, TRACE_HEADER, InitialSolverFailure, RefineConfig, Refiner, Trace,
)


@dataclass
class RunSpec:
    map: str
    scen: str | None = None
    agents: int | None = None
    seed: int = 0
    config: RefineConfig = field(default_factory=RefineConfig)
    out_solution: str | None = None
    out_trace: str | None = None


@dataclass
class RunResult:
    success: bool
    cost: int | None
    lower_bound: int
    initial_cost: int | None
    init_ms: int | None
    total_ms: int
    solution: Solution | None = None
    trace: Trace | None = None
    error: str | None = None

    @property
    def ratio(self) -> float | None:
        return None if self.cost is None else _ratio(self.cost, self.lower_bound)

    @property
    def initial_ratio(self) -> float | None:
        return None if self.initial_cost is None else _ratio(self.initial_cost, self.lower_bound)

    def summary(self) -> str:
        if not self.success:
            return f"FAILURE {self.error} total_ms={self.total_ms}"
        return (f"cost={self.cost} ratio={self.ratio:.4f} "
                f"init_ms={self.init_ms} total_ms={self.total_ms}")


def _ratio(cost: int, lb: int) -> float:
    return cost / lb if lb > 0 else 1.0


def resolve_map(name: str) -> Grid:
    """A path to a .map file, or the name of a bundled map."""
    if os.path.exists(name):
        return load_map(name)
    stem = os.path.basename(name)
    if stem.endswith(".map"):
        stem = stem[:-4]
    try:
        return bundled_map(stem)
    except FileNotFoundError:
        raise FileNotFoundError(f"no map file or bundled map named {name!r}") from None


def build_instance(spec: RunSpec) -> Instance:
    grid = resolve_map(spec.map)
    if spec.scen is not None:
        if spec.scen.endswith(".scen"):
            return load_scen(spec.scen, grid, spec.agents)
        with open(spec.scen) as fh:
            inst = parse_plain(fh.read(), grid)
        if spec.agents is not None:
            inst = Instance(grid, inst.starts[: spec.agents], inst.goals[: spec.agents])
        return inst
    if spec.agents is None:
        raise ValueError("need --scen or --agents")
    return random_instance(grid, spec.agents, spec.seed)


def instance_hash(instance: Instance) -> str:
    return hashlib.sha1(repr(instance.key()).encode()).hexdigest()[:12]


def run_single(spec: RunSpec, instance: Instance | None = None) -> RunResult:
    """Solve one instance; the trace CSV is appended row by row while running."""
    if instance is None:
        instance = build_instance(spec)
    lb = instance.lower_bound()
    trace_fh = None
    writer = None
    if spec.out_trace:
        trace_fh = open(spec.out_trace, "w", newline="")
        writer = csv.writer(trace_fh)
        writer.writerow(TRACE_HEADER)
        trace_fh.flush()

    def on_entry(entry):
        if writer is not None:
            writer.writerow(entry.row())
            trace_fh.flush()

    t0 = time.perf_counter()
    refiner = Refiner(instance, spec.config, on_entry=on_entry)
    try:
        solution, trace = refiner.run()
    except InitialSolverFailure as exc:
        return RunResult(False, None, lb, None, None,
                         int((time.perf_counter() - t0) * 1000), error=str(exc))
    finally:
        if trace_fh is not None:
            trace_fh.close()
    total_ms = int((time.perf_counter() - t0) * 1000)
    if spec.out_solution:
        with open(spec.out_solution, "w") as fh:
            fh.write(format_solution(instance.grid, solution))
    return RunResult(True, solution.sum_of_costs(), lb, trace.initial_cost, trace.init_ms,
                     total_ms, solution, trace)


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepRow:
    pipeline: str
    instance_id: int
    instance_hash: str
    initial_ratio: float | None
    final_ratio: float | None
    success: bool
    init_ms: int | None
    total_ms: int
    trace_path: str | None


@dataclass
class SweepReport:
    rows: list[SweepRow]

    def pipelines(self) -> list[str]:
        return list(dict.fromkeys(r.pipeline for r in self.rows))

    def summary(self) -> list[dict]:
        out = []
        for name in self.pipelines():
            rows = [r for r in self.rows if r.pipeline == name]
            ok = [r for r in rows if r.success]
            out.append({
                "pipeline": name,
                "instances": len(rows),
                "success": len(ok),
                "cost_init": statistics.mean(r.initial_ratio for r in ok) if ok else None,
                "cost_last": statistics.mean(r.final_ratio for r in ok) if ok else None,
                "init_ms": statistics.mean(r.init_ms for r in ok) if ok else None,
            })
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f.name for f in fields(SweepRow)])
            for r in self.rows:
                w.writerow(list(asdict(r).values()))

    def format_table(self) -> str:
        lines = [f"{'pipeline':<20}{'#success':>10}{'cost (init)':>13}{'cost (last)':>13}{'init (ms)':>11}"]
        for s in self.summary():
            def f(v, spec):
                return format(v, spec) if v is not None else "-"
            lines.append(f"{s['pipeline']:<20}{str(s['success']) + '/' + str(s['instances']):>10}"
                         f"{f(s['cost_init'], '.3f'):>13}{f(s['cost_last'], '.3f'):>13}"
                         f"{f(s['init_ms'], '.0f'):>11}")
        return "\n".join(lines)


def _sweep_job(args) -> SweepRow:
    name, idx, spec = args
    inst = build_instance(spec)
    res = run_single(spec, inst)
    return SweepRow(name, idx, instance_hash(inst), res.initial_ratio, res.ratio, res.success,
                    res.init_ms, res.total_ms, spec.out_trace)


def run_sweep(pipelines: Sequence[tuple[str, RefineConfig]], map_name: str, agents: int,
              instances: int, seed: int = 0, out_dir: str | None = None,
              workers: int = 1) -> SweepReport:
    """Every pipeline sees the same instances (instance k uses seed ``seed + k``)."""
    if not pipelines:
        raise ValueError("need at least one pipeline")
    jobs = []
    for name, cfg in pipelines:
        for k in range(instances):
            trace = os.path.join(out_dir, f"{name}-{k}.csv") if out_dir else None
            jobs.append((name, k, RunSpec(map_name, None, agents, seed + k, cfg, None, trace)))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    return SweepReport(rows)


# -- argument handling --------------------------------------------------------

def read_kv(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


_CONFIG_KEYS = {
    "init": ("init_solver", str),
    "whca_window": ("whca_window", int),
    "ecbs_w": ("ecbs_w", float),
    "rules": ("rules", str),
    "random_set_size": ("random_set_size", int),
    "refine_timeout_ms": ("refine_timeout_ms", int),
    "node_limit": ("node_limit", int),
    "budget_ms": ("budget_ms", int),
    "iterations": ("iterations", int),
    "deterministic": ("deterministic", lambda s: str(s).lower() in ("1", "true", "yes", "on")),
    "seed": ("seed", int),
    "agent_order": ("agent_order", str),
}


def config_from(values: dict, base: RefineConfig | None = None) -> RefineConfig:
    kw = {}
    for key, (attr, conv) in _CONFIG_KEYS.items():
        if values.get(key) is not None:
            kw[attr] = conv(values[key])
    base = base or RefineConfig()
    return replace(base, **kw)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mapf-ir", description="Iterative refinement for MAPF.")
    p.add_argument("--map", help="map file or bundled map name (e.g. random-32-32-20)")
    p.add_argument("--scen", help=".scen file or plain instance file")
    p.add_argument("--agents", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--init", choices=INIT_SOLVERS)
    p.add_argument("--whca-window", type=int)
    p.add_argument("--ecbs-w", type=float)
    p.add_argument("--rules", help="comma list of rules, or 'composition'")
    p.add_argument("--random-set-size", type=int)
    p.add_argument("--refine-timeout-ms", type=int)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--budget-ms", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--deterministic", action="store_true", default=None)
    p.add_argument("--out-solution")
    p.add_argument("--out-trace")
    p.add_argument("--config", help="flat key=value file with defaults for the flags above")
    p.add_argument("--sweep", metavar="CONFIG", help="run a sweep described by a key=value file")
    return p


def _sweep_from_file(path: str, cli: dict) -> int:
    kv = read_kv(path)
    base = config_from({**kv, **{k: v for k, v in cli.items() if v is not None}})
    names = [s.strip() for s in kv.get("pipelines", base.init_solver).split(",") if s.strip()]
    pipelines = []
    for name in names:
        prefix = f"pipeline.{name}."
        over = {k[len(prefix):]: v for k, v in kv.items() if k.startswith(prefix)}
        if "init" not in over and name in INIT_SOLVERS:
            over["init"] = name
        pipelines.append((name, config_from(over, base)))
    report = run_sweep(pipelines, cli.get("map") or kv["map"],
                       int(cli.get("agents") or kv["agents"]), int(kv.get("instances", 1)),
                       int(cli.get("seed") if cli.get("seed") is not None else kv.get("seed", 0)),
                       kv.get("out_dir"), int(kv.get("workers", 1)))
    print(report.format_table())
    if kv.get("report"):
        report.write_csv(kv["report"])
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    cli = {k: v for k, v in vars(args).items() if k not in ("config", "sweep")}
    if args.sweep:
        return _sweep_from_file(args.sweep, cli)
    values = read_kv(args.config) if args.config else {}
    values.update({k: v for k, v in cli.items() if v is not None})
    if not values.get("map"):
        print("error: --map is required", file=sys.stderr)
        return 2
    try:
        cfg = config_from(values)
        spec = RunSpec(values["map"], values.get("scen"),
                       int(values["agents"]) if values.get("agents") is not None else None,
                       int(values.get("seed", 0)), cfg,
                       values.get("out_solution"), values.get("out_trace"))
        instance = build_instance(spec)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res = run_single(spec, instance)
    print(res.summary())
    if res.success:
        assert not validate(instance, res.solution)
    return 0 if res.success else 1


if __name__ == "__main__":
    sys.exit(main())
