"""ICBS over an agent subset, with every other agent frozen as a dynamic obstacle."""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..graph import Grid
from ..instance import Instance
from ..mdd import Mdd, build_mdd
from ..plan import Solution
from .astar import (
    EMPTY_OBSTACLES, NO_CONSTRAINTS, ConstraintSet, FixedObstacles, SearchTimeout,
    path_cost, space_time_astar,
)

IMPROVED = "improved"
NO_IMPROVEMENT = "no_improvement"
ABORTED = "aborted"

CARDINAL, SEMI_CARDINAL, NON_CARDINAL = 0, 1, 2


@dataclass
class SubsetResult:
    status: str
    solution: Solution
    nodes: int = 0


@dataclass(frozen=True)
class Conflict:
    a1: int
    a2: int
    kind: str  # "vertex" | "edge"
    t: int
    loc1: tuple[int, ...]  # vertex: (v,); edge: (u, v) as moved by a1
    loc2: tuple[int, ...]


def first_conflict(a1: int, p1: Sequence[int], a2: int, p2: Sequence[int]) -> Conflict | None:
    """Earliest vertex or swap conflict between two paths parked at their ends."""
    n1, n2 = len(p1) - 1, len(p2) - 1
    horizon = max(n1, n2)
    prev1, prev2 = p1[0], p2[0]
    if prev1 == prev2:
        return Conflict(a1, a2, "vertex", 0, (prev1,), (prev1,))
    for t in range(1, horizon + 1):
        v1 = p1[t] if t <= n1 else p1[n1]
        v2 = p2[t] if t <= n2 else p2[n2]
        if v1 == v2:
            return Conflict(a1, a2, "vertex", t, (v1,), (v1,))
        if v1 == prev2 and v2 == prev1:
            return Conflict(a1, a2, "edge", t - 1, (prev1, v1), (prev2, v2))
        prev1, prev2 = v1, v2
    return None


class _Node:
    __slots__ = ("cost", "constraints", "paths", "conflicts", "mdds")

    def __init__(self, cost, constraints, paths, conflicts, mdds):
        self.cost = cost
        self.constraints: dict[int, ConstraintSet] = constraints
        self.paths: dict[int, tuple[int, ...]] = paths
        self.conflicts: dict[tuple[int, int], Conflict] = conflicts
        self.mdds: dict[int, Mdd] = mdds


def _avoidance_table(paths: dict[int, tuple[int, ...]], skip: int) -> dict[tuple[int, int], int]:
    """(v, t) -> number of other paths there; ends are padded a few steps past the longest."""
    horizon = max(len(p) for p in paths.values()) + 8
    table: dict[tuple[int, int], int] = {}
    for a, p in paths.items():
        if a == skip:
            continue
        for t in range(horizon):
            key = (p[t] if t < len(p) else p[-1], t)
            table[key] = table.get(key, 0) + 1
    return table


class CBSSearch:
    """Best-first CBS with MDD-based conflict prioritisation (ICBS).

    Nodes whose cost reaches ``upper_bound`` are discarded, so the search only
    looks for strictly cheaper joint plans.
    """

    def __init__(self, grid: Grid, agents: Sequence[int], starts: dict[int, int],
                 goals: dict[int, int], obstacles: FixedObstacles = EMPTY_OBSTACLES,
                 upper_bound: float = float("inf"), deadline: float | None = None,
                 node_limit: int | None = None, horizon_hint: int = 0):
        self.grid = grid
        self.agents = list(agents)
        self.starts = starts
        self.goals = goals
        self.obstacles = obstacles
        self.upper_bound = upper_bound
        self.deadline = deadline
        self.node_limit = node_limit
        self.horizon_hint = horizon_hint
        self.generated = 0
        self.expanded = 0

    def _plan(self, agent: int, cons: ConstraintSet, max_cost: int | None = None,
              others: dict[int, tuple[int, ...]] | None = None) -> tuple[int, ...] | None:
        soft = _avoidance_table(others, agent) if others else None
        return space_time_astar(self.grid, self.starts[agent], self.goals[agent], cons,
                                self.obstacles, self.horizon_hint, self.deadline,
                                soft=soft, max_cost=max_cost)

    def _mdd(self, node: _Node, agent: int) -> Mdd:
        mdd = node.mdds.get(agent)
        if mdd is None:
            cons = node.constraints.get(agent, NO_CONSTRAINTS)
            obs = self.obstacles
            cv, ce = cons.vertex, cons.edge

            def vertex_ok(v, t):
                return (v, t) not in cv and obs.occupant(v, t) is None

            def edge_ok(u, v, t):
                return (u, v, t) not in ce and not (u != v and (v, u, t) in obs.moves)

            mdd = build_mdd(self.grid, self.starts[agent], self.goals[agent],
                            path_cost(node.paths[agent]), agent, vertex_ok, edge_ok)
            node.mdds[agent] = mdd
        return mdd

    @staticmethod
    def _layer(mdd: Mdd, t: int) -> set[int]:
        return mdd.layers[t] if t <= mdd.cost_bound else {mdd.goal}

    def _singleton(self, mdd: Mdd, locs: tuple[int, ...], t: int) -> bool:
        if len(locs) == 1:
            return self._layer(mdd, t) == {locs[0]}
        return self._layer(mdd, t) == {locs[0]} and self._layer(mdd, t + 1) == {locs[1]}

    def classify(self, node: _Node, c: Conflict) -> int:
        s1 = self._singleton(self._mdd(node, c.a1), c.loc1, c.t)
        s2 = self._singleton(self._mdd(node, c.a2), c.loc2, c.t)
        if s1 and s2:
            return CARDINAL
        return SEMI_CARDINAL if (s1 or s2) else NON_CARDINAL

    def _choose(self, node: _Node) -> Conflict:
        best, best_key = None, None
        for c in sorted(node.conflicts.values(), key=lambda c: (c.t, c.a1, c.a2)):
            cls = self.classify(node, c)
            key = (cls, c.t)
            if best_key is None or key < best_key:
                best, best_key = c, key
            if cls == CARDINAL:
                break
        return best

    def _check_budget(self):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise SearchTimeout
        if self.node_limit is not None and self.generated > self.node_limit:
            raise SearchTimeout

    def _conflicts_for(self, paths, agent, conflicts):
        out = {k: c for k, c in conflicts.items() if agent not in k}
        for other in paths:
            if other != agent:
                a1, a2 = sorted((agent, other))
                c = first_conflict(a1, paths[a1], a2, paths[a2])
                if c is not None:
                    out[(a1, a2)] = c
        return out

    def solve(self, root_paths: dict[int, tuple[int, ...]] | None = None):
        """Return ``(status, paths)``; status is IMPROVED (found), NO_IMPROVEMENT or ABORTED."""
        try:
            return self._solve(root_paths)
        except SearchTimeout:
            return ABORTED, None

    def _solve(self, root_paths):
        paths = {}
        for a in self.agents:
            p = root_paths.get(a) if root_paths else None
            if p is None:
                p = self._plan(a, NO_CONSTRAINTS)
                if p is None:
                    return NO_IMPROVEMENT, None
            paths[a] = p
        conflicts = {}
        for a1, a2 in itertools.combinations(sorted(self.agents), 2):
            c = first_conflict(a1, paths[a1], a2, paths[a2])
            if c is not None:
                conflicts[(a1, a2)] = c
        cost = sum(path_cost(p) for p in paths.values())
        if cost >= self.upper_bound:
            return NO_IMPROVEMENT, None
        root = _Node(cost, {}, paths, conflicts, {})
        tie = itertools.count()
        open_list = [(root.cost, len(root.conflicts), next(tie), root)]
        self.generated = 1
        while open_list:
            self._check_budget()
            _, _, _, node = heapq.heappop(open_list)
            if not node.conflicts:
                return IMPROVED, node.paths
            self.expanded += 1
            c = self._choose(node)
            for agent, locs in ((c.a1, c.loc1), (c.a2, c.loc2)):
                cons = node.constraints.get(agent, NO_CONSTRAINTS)
                if len(locs) == 1:
                    cons = cons.with_vertex(locs[0], c.t)
                else:
                    cons = cons.with_edge(locs[0], locs[1], c.t)
                old_cost = path_cost(node.paths[agent])
                budget = None
                if self.upper_bound != float("inf"):
                    budget = int(self.upper_bound) - 1 - (node.cost - old_cost)
                new_path = self._plan(agent, cons, budget, node.paths)
                if new_path is None:
                    continue
                new_cost = node.cost - old_cost + path_cost(new_path)
                if new_cost >= self.upper_bound:
                    continue
                child_paths = dict(node.paths)
                child_paths[agent] = new_path
                child_cons = dict(node.constraints)
                child_cons[agent] = cons
                mdds = {k: m for k, m in node.mdds.items() if k != agent}
                child = _Node(new_cost, child_cons, child_paths,
                              self._conflicts_for(child_paths, agent, node.conflicts), mdds)
                self.generated += 1
                heapq.heappush(open_list, (child.cost, len(child.conflicts), next(tie), child))
        return NO_IMPROVEMENT, None


def _frozen(current: Solution, keep: Iterable[int]) -> FixedObstacles:
    return FixedObstacles.from_paths({j: current.paths[j] for j in keep})


def icbs_subset(instance: Instance, subset: Iterable[int], current: Solution,
                deadline: float | None = None, node_limit: int | None = 10_000) -> SubsetResult:
    """Re-plan ``subset`` optimally against everyone else's frozen paths.

    Returns the new solution only if the subset's sum of costs strictly drops.
    ``deadline`` is an absolute ``time.perf_counter()`` value.
    """
    subset = sorted(set(subset))
    if not subset:
        raise ValueError("modification set is empty")
    members = set(subset)
    others = [j for j in range(instance.n) if j not in members]
    obstacles = _frozen(current, others)
    grid = instance.grid
    hint = current.horizon

    # Agents with no path at all around the frozen ones keep their incumbent
    # paths as extra obstacles. Any other member can only take part in a cheaper
    # plan if its own cost leaves room for the rest at their distance lower bounds.
    active = list(subset)
    roots: dict[int, tuple[int, ...]] = {}
    try:
        while True:
            incumbent = sum(current.cost(a) for a in active)
            slack = incumbent - 1 - sum(instance.dist(a) for a in active)
            roots, stuck = {}, []
            for a in active:
                soft = _avoidance_table(roots, a) if roots else None
                p = space_time_astar(grid, instance.starts[a], instance.goals[a], NO_CONSTRAINTS,
                                     obstacles, hint, deadline, soft=soft,
                                     max_cost=instance.dist(a) + slack)
                if p is None:
                    if space_time_astar(grid, instance.starts[a], instance.goals[a],
                                        NO_CONSTRAINTS, obstacles, hint, deadline) is not None:
                        return SubsetResult(NO_IMPROVEMENT, current)
                    stuck.append(a)
                else:
                    roots[a] = p
            if not stuck:
                break
            for a in stuck:
                obstacles.add(a, current.paths[a])
                active.remove(a)
            if not active:
                return SubsetResult(NO_IMPROVEMENT, current)
    except SearchTimeout:
        return SubsetResult(ABORTED, current)

    search = CBSSearch(grid, active, {a: instance.starts[a] for a in active},
                       {a: instance.goals[a] for a in active}, obstacles,
                       upper_bound=incumbent, deadline=deadline, node_limit=node_limit,
                       horizon_hint=hint)
    status, paths = search.solve(roots)
    if status == IMPROVED:
        return SubsetResult(IMPROVED, current.replace(paths), search.generated)
    return SubsetResult(status, current, search.generated)


def icbs_full(instance: Instance, deadline: float | None = None,
              node_limit: int | None = None) -> Solution | None:
    """Optimal sum-of-costs solution, or None on timeout / node limit / infeasibility."""
    agents = range(instance.n)
    search = CBSSearch(instance.grid, agents, dict(enumerate(instance.starts)),
                       dict(enumerate(instance.goals)), deadline=deadline, node_limit=node_limit)
    status, paths = search.solve()
    if status != IMPROVED:
        return None
    return Solution.from_paths([paths[a] for a in agents])
