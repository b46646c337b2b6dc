"""Bounded-suboptimal ECBS: focal search at both the high and the low level."""

from __future__ import annotations

import heapq
import itertools
import time
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

from ..graph import UNREACHABLE, Grid
from ..instance import Instance
from ..plan import Solution
from .astar import (
    CHECK_EVERY, EMPTY_OBSTACLES, NO_CONSTRAINTS, ConstraintSet, FixedObstacles,
    SearchTimeout, path_cost,
)
from .icbs import ABORTED, IMPROVED, NO_IMPROVEMENT, SubsetResult, first_conflict


class _ConflictTable:
    """Counts how many other (soft) paths a move would collide with."""

    def __init__(self, paths: Iterable[Sequence[int]]):
        self.vertex: dict = defaultdict(int)
        self.parked: dict = defaultdict(list)
        self.moves: dict = defaultdict(int)
        self.max_t = 0
        for p in paths:
            end = path_cost(p)
            for t in range(end):
                self.vertex[(p[t], t)] += 1
                if p[t] != p[t + 1]:
                    self.moves[(p[t], p[t + 1], t)] += 1
            self.parked[p[end]].append(end)
            self.max_t = max(self.max_t, end)

    def count(self, u: int, v: int, t: int) -> int:
        """Collisions caused by moving ``u -> v`` at ``t -> t+1``."""
        n = self.vertex.get((v, t + 1), 0)
        for since in self.parked.get(v, ()):
            if t + 1 >= since:
                n += 1
        if u != v:
            n += self.moves.get((v, u, t), 0)
        return n


def focal_astar(grid: Grid, start: int, goal: int, w: float,
                constraints: ConstraintSet = NO_CONSTRAINTS,
                obstacles: FixedObstacles = EMPTY_OBSTACLES,
                table: _ConflictTable | None = None, horizon_hint: int = 0,
                deadline: float | None = None) -> tuple[tuple[int, ...], int] | None:
    """Path of cost at most ``w`` times optimal with few soft conflicts.

    Returns ``(path, lower_bound)`` where ``lower_bound`` never exceeds the optimal
    cost under the same constraints, or None if infeasible.
    """
    if obstacles.occupant(start, 0) is not None or (start, 0) in constraints.vertex:
        return None
    h = grid.distance_table(goal)
    if h[start] == UNREACHABLE:
        return None
    goal_block = obstacles.last_goal_block(goal)
    if goal_block is None:
        return None
    for (v, t) in constraints.vertex:
        if v == goal and t > goal_block:
            goal_block = t
    static_after = max(constraints.max_t, obstacles.max_t, table.max_t if table else 0, 0)
    limit = max(static_after, horizon_hint) + grid.node_count + 1
    adj = grid.adj
    cvert, cedge = constraints.vertex, constraints.edge

    nodes: list[tuple[int, int, int]] = [(start, -1, 0)]  # (node, parent, time)
    best_g: dict = {(start, 0): 0}
    open_count: dict[int, int] = defaultdict(int)  # f -> nodes still in OPEN
    f_heap: list[int] = []
    waiting: dict[int, list] = defaultdict(list)  # f -> OPEN entries outside FOCAL
    focal: list = []

    f_min = h[start]
    bound = w * f_min
    open_count[f_min] += 1
    heapq.heappush(f_heap, f_min)
    heapq.heappush(focal, (0, f_min, h[start], 0, start, 0))
    expansions = 0

    while focal:
        conf, f, hv, neg_g, v, idx = heapq.heappop(focal)
        open_count[f] -= 1
        t = -neg_g
        key = (v, t if t <= static_after else static_after + 1)
        if best_g.get(key, t) < t:
            continue  # superseded by a cheaper copy
        if v == goal and t > goal_block:
            path = []
            while idx >= 0:
                node, parent, _ = nodes[idx]
                path.append(node)
                idx = parent
            return tuple(reversed(path)), f_min
        expansions += 1
        if deadline is not None and expansions % CHECK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout
        nt = t + 1
        if nt <= limit:
            nkey_t = nt if nt <= static_after else static_after + 1
            for u in adj[v] + (v,):
                hu = h[u]
                if hu == UNREACHABLE:
                    continue
                if (u, nt) in cvert or (v, u, t) in cedge or obstacles.blocks(v, u, t):
                    continue
                ukey = (u, nkey_t)
                if best_g.get(ukey, nt + 1) <= nt:
                    continue
                best_g[ukey] = nt
                nodes.append((u, idx, nt))
                fu = nt + hu
                entry = (conf + (table.count(v, u, t) if table else 0), fu, hu, -nt, u,
                         len(nodes) - 1)
                open_count[fu] += 1
                heapq.heappush(f_heap, fu)
                if fu <= bound:
                    heapq.heappush(focal, entry)
                else:
                    waiting[fu].append(entry)
        # raise the lower bound once its f-level is exhausted, then refill FOCAL
        while f_heap and open_count[f_heap[0]] <= 0:
            heapq.heappop(f_heap)
        if not f_heap:
            break
        if f_heap[0] > f_min:
            f_min = f_heap[0]
            bound = w * f_min
            for fw in sorted(k for k in waiting if k <= bound):
                for entry in waiting.pop(fw):
                    heapq.heappush(focal, entry)
    return None


class _HLNode:
    __slots__ = ("constraints", "paths", "lbs", "cost", "lb", "conflicts")

    def __init__(self, constraints, paths, lbs, conflicts):
        self.constraints = constraints
        self.paths = paths
        self.lbs = lbs
        self.cost = sum(path_cost(p) for p in paths.values())
        self.lb = sum(lbs.values())
        self.conflicts = conflicts


class ECBSSearch:
    def __init__(self, grid: Grid, agents: Sequence[int], starts: Mapping[int, int],
                 goals: Mapping[int, int], w: float, obstacles: FixedObstacles = EMPTY_OBSTACLES,
                 deadline: float | None = None, node_limit: int | None = None,
                 horizon_hint: int = 0):
        if w < 1:
            raise ValueError("suboptimality factor must be >= 1")
        self.grid, self.agents, self.starts, self.goals = grid, list(agents), starts, goals
        self.w, self.obstacles = w, obstacles
        self.deadline, self.node_limit, self.horizon_hint = deadline, node_limit, horizon_hint
        self.generated = 0

    def _plan(self, agent, cons, paths):
        table = _ConflictTable(p for a, p in paths.items() if a != agent)
        return focal_astar(self.grid, self.starts[agent], self.goals[agent], self.w, cons,
                           self.obstacles, table, self.horizon_hint, self.deadline)

    @staticmethod
    def _conflicts(paths):
        out = {}
        for a1, a2 in itertools.combinations(sorted(paths), 2):
            c = first_conflict(a1, paths[a1], a2, paths[a2])
            if c is not None:
                out[(a1, a2)] = c
        return out

    def solve(self):
        """Return conflict-free paths within ``w`` of optimal, or None on timeout / infeasibility."""
        try:
            return self._solve()
        except SearchTimeout:
            return None

    def _solve(self):
        paths, lbs = {}, {}
        for a in self.agents:
            res = self._plan(a, NO_CONSTRAINTS, paths)
            if res is None:
                return None
            paths[a], lbs[a] = res
        root = _HLNode({}, paths, lbs, self._conflicts(paths))
        self.generated = 1
        open_nodes = {0: root}
        ids = itertools.count(1)
        while open_nodes:
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise SearchTimeout
            if self.node_limit is not None and self.generated > self.node_limit:
                raise SearchTimeout
            lb_min = min(n.lb for n in open_nodes.values())
            nid = min((k for k, n in open_nodes.items() if n.cost <= self.w * lb_min),
                      key=lambda k: (len(open_nodes[k].conflicts), open_nodes[k].cost, k))
            node = open_nodes.pop(nid)
            if not node.conflicts:
                return node.paths
            c = min(node.conflicts.values(), key=lambda c: (c.t, c.a1, c.a2))
            for agent, locs in ((c.a1, c.loc1), (c.a2, c.loc2)):
                cons = node.constraints.get(agent, NO_CONSTRAINTS)
                cons = cons.with_vertex(locs[0], c.t) if len(locs) == 1 else \
                    cons.with_edge(locs[0], locs[1], c.t)
                res = self._plan(agent, cons, node.paths)
                if res is None:
                    continue
                child_paths = dict(node.paths)
                child_lbs = dict(node.lbs)
                child_paths[agent], child_lbs[agent] = res
                child_cons = dict(node.constraints)
                child_cons[agent] = cons
                out = {k: v for k, v in node.conflicts.items() if agent not in k}
                for other in child_paths:
                    if other != agent:
                        a1, a2 = sorted((agent, other))
                        cf = first_conflict(a1, child_paths[a1], a2, child_paths[a2])
                        if cf is not None:
                            out[(a1, a2)] = cf
                open_nodes[next(ids)] = _HLNode(child_cons, child_paths, child_lbs, out)
                self.generated += 1
        return None


def ecbs(instance: Instance, w: float, deadline: float | None = None,
         node_limit: int | None = None) -> Solution | None:
    """Solution with sum of costs at most ``w`` times optimal, or None on timeout."""
    search = ECBSSearch(instance.grid, range(instance.n), dict(enumerate(instance.starts)),
                        dict(enumerate(instance.goals)), w, deadline=deadline,
                        node_limit=node_limit)
    paths = search.solve()
    if paths is None:
        return None
    return Solution.from_paths([paths[a] for a in range(instance.n)])


def ecbs_subset(instance: Instance, subset: Iterable[int], current: Solution, w: float = 1.0,
                deadline: float | None = None, node_limit: int | None = 10_000) -> SubsetResult:
    """Refinement solver variant: keeps the new subset paths only if strictly cheaper."""
    subset = sorted(set(subset))
    members = set(subset)
    obstacles = FixedObstacles.from_paths(
        {j: current.paths[j] for j in range(instance.n) if j not in members})
    search = ECBSSearch(instance.grid, subset, {a: instance.starts[a] for a in subset},
                        {a: instance.goals[a] for a in subset}, w, obstacles, deadline,
                        node_limit, current.horizon)
    try:
        paths = search._solve()
    except SearchTimeout:
        return SubsetResult(ABORTED, current, search.generated)
    if paths is None:
        return SubsetResult(NO_IMPROVEMENT, current, search.generated)
    if sum(path_cost(p) for p in paths.values()) < sum(current.cost(a) for a in subset):
        return SubsetResult(IMPROVED, current.replace(paths), search.generated)
    return SubsetResult(NO_IMPROVEMENT, current, search.generated)
