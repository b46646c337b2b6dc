"""Anytime iterative refinement: initial solution, then repeated subset re-planning."""

from __future__ import annotations

import csv
import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from ..instance import Instance
from ..plan import Solution, compress
from ..solver_opt.ecbs import ecbs, ecbs_subset
from ..solver_opt.icbs import ABORTED, IMPROVED, NO_IMPROVEMENT, icbs_subset
from ..solvers_init.hybrid import pibt_complete
from ..solvers_init.pibt import pibt_solve
from ..solvers_init.prioritized import hca, whca
from ..solvers_init.push_and_swap import push_and_swap
from .rules import (
    ModificationSet,
    repair_local_goals,
    select_bottleneck,
    select_focus_goals,
    select_random,
    select_single,
    select_using_mdd,
)

INIT_SOLVERS = ("pibt_complete", "pibt", "ps", "hca", "whca", "ecbs")
RULES = ("random", "single", "focus_goals", "local_repair", "using_mdd", "bottleneck")
COMPOSITION = ("local_repair", "focus_goals", "using_mdd", "random")
TRACE_HEADER = ("elapsed_ms", "iteration", "sum_of_costs", "rule", "set_size", "outcome")


class InitialSolverFailure(RuntimeError):
    """The initial solver found no solution; refinement never starts."""


def parse_rules(text: str | Sequence[str]) -> tuple[str, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    out: list[str] = []
    for item in (s.strip() for s in items):
        if item == "composition":
            out.extend(COMPOSITION)
        elif item in RULES:
            out.append(item)
        elif item:
            raise ValueError(f"unknown rule {item!r}; expected one of {RULES + ('composition',)}")
    if not out:
        raise ValueError("empty rule schedule")
    return tuple(out)


@dataclass
class RefineConfig:
    init_solver: str = "pibt_complete"
    whca_window: int = 10
    ecbs_w: float = 1.2
    rules: tuple[str, ...] = COMPOSITION
    random_set_size: int = 30
    refine_timeout_ms: int = 500
    node_limit: int = 10_000
    budget_ms: int | None = 90_000
    iterations: int | None = None
    deterministic: bool = False
    seed: int = 0
    agent_order: str = "index"          # or "cost_gap"
    refine_solver: str = "icbs"         # or "ecbs" (bounded by refine_w)
    refine_w: float = 1.0
    allow_full_set: bool = True

    def __post_init__(self):
        self.rules = parse_rules(self.rules)
        if self.init_solver not in INIT_SOLVERS:
            raise ValueError(f"unknown initial solver {self.init_solver!r}")
        if self.agent_order not in ("index", "cost_gap"):
            raise ValueError(f"unknown agent order {self.agent_order!r}")
        if self.refine_solver not in ("icbs", "ecbs"):
            raise ValueError(f"unknown refinement solver {self.refine_solver!r}")
        for name in ("whca_window", "random_set_size", "refine_timeout_ms", "node_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("budget_ms", "iterations"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.ecbs_w < 1 or self.refine_w < 1:
            raise ValueError("suboptimality weights must be >= 1")
        if self.deterministic and self.iterations is None:
            raise ValueError("deterministic mode needs an iteration cap")


@dataclass(frozen=True)
class TraceEntry:
    elapsed_ms: int
    iteration: int
    sum_of_costs: int
    rule: str
    set_size: int
    outcome: str

    def row(self) -> list:
        return [self.elapsed_ms, self.iteration, self.sum_of_costs, self.rule,
                self.set_size, self.outcome]


@dataclass
class Trace:
    """Row 0 records the initial solution (rule = initial solver, outcome ``initial``)."""
    entries: list[TraceEntry] = field(default_factory=list)

    @property
    def initial_cost(self) -> int:
        return self.entries[0].sum_of_costs

    @property
    def final_cost(self) -> int:
        return self.entries[-1].sum_of_costs

    @property
    def init_ms(self) -> int:
        return self.entries[0].elapsed_ms

    def costs(self) -> list[int]:
        return [e.sum_of_costs for e in self.entries]

    def iterations(self) -> list[TraceEntry]:
        return self.entries[1:]

    def is_monotone(self) -> bool:
        c = self.costs()
        return all(a >= b for a, b in zip(c, c[1:]))

    def without_clock(self) -> list[tuple]:
        return [tuple(e.row()[1:]) for e in self.entries]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            w.writerows(e.row() for e in self.entries)


def read_trace(path) -> Trace:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Trace([TraceEntry(int(r["elapsed_ms"]), int(r["iteration"]), int(r["sum_of_costs"]),
                             r["rule"], int(r["set_size"]), r["outcome"]) for r in rows])


def initial_solution(instance: Instance, config: RefineConfig,
                     deadline: float | None = None) -> Solution | None:
    name = config.init_solver
    if name == "pibt_complete":
        return pibt_complete(instance)
    if name == "pibt":
        return pibt_solve(instance)
    if name == "ps":
        sol = push_and_swap(instance)
        return compress(instance, sol) if sol is not None else None
    if name == "hca":
        return hca(instance)
    if name == "whca":
        return whca(instance, config.whca_window)
    return ecbs(instance, config.ecbs_w, deadline)


class Schedule:
    """Which rule runs next, and on which agent.

    Per-agent rules sweep all agents in order; a sweep with zero committed
    improvements moves to the next rule. A random stage counts ceil(n / k) draws
    as one sweep. The last rule advances nowhere: per-agent rules then exhaust the
    schedule, while a random last rule runs until the budget ends.
    """

    def __init__(self, rules: Sequence[str], n: int, order: Callable[[], list[int]]):
        self.rules = list(rules)
        self.n = n
        self.order = order
        self.stage = 0
        self.advances = 0
        self.done = False
        self._queue: list[int] = []
        self._improved = False
        self._pass_len = 0

    @property
    def rule(self) -> str:
        return self.rules[self.stage]

    def _start_pass(self, random_k: int) -> None:
        if self.rule == "random":
            self._queue = [-1] * math.ceil(self.n / random_k)
        else:
            self._queue = list(self.order())
        self._improved = False

    def next(self, random_k: int) -> tuple[str, int] | None:
        while not self.done:
            if self._queue:
                return self.rule, self._queue.pop(0)
            if self._pass_len and not self._improved:
                if self.stage + 1 == len(self.rules):
                    if self.rule != "random":
                        self.done = True
                        break
                else:
                    self.stage += 1
                    self.advances += 1
            self._pass_len = 1
            self._start_pass(random_k)
        return None

    def report(self, improved: bool) -> None:
        self._improved |= improved

    def stop(self) -> None:
        self.done = True


class Refiner:
    """Runs the anytime loop. ``incumbent`` always holds a complete valid solution.

    Another thread may call ``request_stop()``; the loop notices at the next
    iteration boundary.
    """

    def __init__(self, instance: Instance, config: RefineConfig | None = None,
                 initial: Solution | None = None,
                 on_entry: Callable[[TraceEntry], None] | None = None):
        self.instance = instance
        self.config = config or RefineConfig()
        self.initial = initial
        self.incumbent: Solution | None = None
        self.trace = Trace()
        self.on_entry = on_entry
        self._stop = threading.Event()
        self.schedule: Schedule | None = None

    def request_stop(self) -> None:
        self._stop.set()

    @property
    def stopped(self) -> bool:
        return self._stop.is_set()

    # -- helpers ----------------------------------------------------------

    def _elapsed_ms(self) -> int:
        return int((time.perf_counter() - self._t0) * 1000)

    def _log(self, entry: TraceEntry) -> None:
        self.trace.entries.append(entry)
        if self.on_entry is not None:
            self.on_entry(entry)

    def _agent_order(self) -> list[int]:
        n = self.instance.n
        if self.config.agent_order == "index":
            return list(range(n))
        sol = self.incumbent
        return sorted(range(n), key=lambda i: (-(sol.cost(i) - self.instance.dist(i)), i))

    def _budget_left(self) -> bool:
        cfg = self.config
        if cfg.deterministic or cfg.budget_ms is None:
            return True
        return self._elapsed_ms() < cfg.budget_ms

    def _deadline(self) -> float | None:
        cfg = self.config
        if cfg.deterministic:
            return None
        d = time.perf_counter() + cfg.refine_timeout_ms / 1000
        if cfg.budget_ms is not None:
            d = min(d, self._t0 + cfg.budget_ms / 1000)
        return d

    def _random_k(self) -> int:
        n = self.instance.n
        k = min(self.config.random_set_size, n)
        if not self.config.allow_full_set and n > 1:
            k = min(k, n - 1)
        return k

    def _select(self, rule: str, i: int) -> ModificationSet:
        inst, sol = self.instance, self.incumbent
        if rule == "random":
            return select_random(sol, self._random_k(), self._rng)
        if rule == "single":
            return select_single(sol, i)
        if rule == "focus_goals":
            return select_focus_goals(inst, sol, i)
        if rule == "using_mdd":
            return select_using_mdd(inst, sol, i)
        if rule == "bottleneck":
            return select_bottleneck(inst, sol, i)
        raise ValueError(rule)

    def _refine(self, agents) -> tuple[str, Solution]:
        cfg = self.config
        if cfg.refine_solver == "ecbs":
            res = ecbs_subset(self.instance, agents, self.incumbent, cfg.refine_w,
                              self._deadline(), cfg.node_limit)
        else:
            res = icbs_subset(self.instance, agents, self.incumbent,
                              self._deadline(), cfg.node_limit)
        return res.status, res.solution

    # -- main loop --------------------------------------------------------

    def steps(self) -> Iterator[TraceEntry]:
        """Yield one trace entry per iteration (the first describes the initial solution)."""
        cfg, inst = self.config, self.instance
        self._t0 = time.perf_counter()
        self._rng = random.Random(cfg.seed)
        if self.initial is not None:
            sol = self.initial
        else:
            deadline = None
            if not cfg.deterministic and cfg.budget_ms is not None:
                deadline = self._t0 + cfg.budget_ms / 1000
            sol = initial_solution(inst, cfg, deadline)
            if sol is None:
                raise InitialSolverFailure(f"{cfg.init_solver} found no solution")
        self.incumbent = sol
        first = TraceEntry(self._elapsed_ms(), 0, sol.sum_of_costs(),
                           cfg.init_solver if self.initial is None else "given",
                           inst.n, "initial")
        self._log(first)
        yield first

        lower = inst.lower_bound()
        if inst.n == 1 and not cfg.allow_full_set:
            return  # the only nonempty subset is the whole instance
        self.schedule = schedule = Schedule(cfg.rules, inst.n, self._agent_order)
        iteration = 0
        while True:
            if self.stopped or not self._budget_left():
                break
            if cfg.iterations is not None and iteration >= cfg.iterations:
                break
            if self.incumbent.sum_of_costs() == lower:
                break  # provably optimal
            step = schedule.next(self._random_k())
            if step is None:
                break
            rule, i = step
            before = self.incumbent.sum_of_costs()

            if rule == "local_repair":
                if self.incumbent.cost(i) == inst.dist(i):
                    schedule.report(False)
                    continue
                repaired = repair_local_goals(inst, self.incumbent, i)
                if repaired is None:
                    # pattern absent: no solver call, no iteration
                    schedule.report(False)
                    continue
                status, size = IMPROVED, len(repaired[1])
                self.incumbent = repaired[0]
            else:
                mset = self._select(rule, i)
                size = len(mset)
                if size == 1:
                    (a,) = mset.agents
                    if self.incumbent.cost(a) == inst.dist(a):
                        schedule.report(False)
                        continue
                if size == inst.n and not cfg.allow_full_set:
                    schedule.report(False)
                    continue
                status, new = self._refine(mset.agents)
                if status == IMPROVED:
                    assert new.sum_of_costs() < before
                    self.incumbent = new
                elif rule == "random" and size == inst.n and status == NO_IMPROVEMENT:
                    schedule.stop()  # whole-instance optimum already reached
            iteration += 1
            schedule.report(status == IMPROVED)
            entry = TraceEntry(self._elapsed_ms(), iteration, self.incumbent.sum_of_costs(),
                               rule, size, status)
            self._log(entry)
            yield entry

    def run(self) -> tuple[Solution, Trace]:
        for _ in self.steps():
            pass
        return self.incumbent, self.trace


def iterative_refine(instance: Instance, config: RefineConfig | None = None,
                     initial: Solution | None = None,
                     on_entry: Callable[[TraceEntry], None] | None = None) -> tuple[Solution, Trace]:
    """Initial solution plus refinement until budget, iteration cap or schedule end.

    Raises ``InitialSolverFailure`` if no initial solution is found.
    """
    return Refiner(instance, config, initial, on_entry).run()


__all__ = [
    "ABORTED", "COMPOSITION", "IMPROVED", "INIT_SOLVERS", "NO_IMPROVEMENT", "RULES",
    "TRACE_HEADER", "InitialSolverFailure", "RefineConfig", "Refiner", "Schedule", "Trace",
    "TraceEntry", "initial_solution", "iterative_refine", "parse_rules", "read_trace",
]
