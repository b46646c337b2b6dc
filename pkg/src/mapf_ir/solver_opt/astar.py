"""Space-time A* against per-agent constraints and frozen (dynamic-obstacle) paths."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..graph import UNREACHABLE, Grid

CHECK_EVERY = 1024


class SearchTimeout(Exception):
    """Raised when a search passes its wall-clock deadline."""


@dataclass(frozen=True)
class Constraint:
    agent: int
    kind: str  # "vertex" | "edge"
    loc: tuple[int, ...]  # (v,) or (u, v) for the move u -> v
    t: int  # vertex: occupancy time; edge: move from t to t+1


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints of one agent, indexed for lookup."""

    vertex: frozenset = frozenset()  # {(v, t)}
    edge: frozenset = frozenset()  # {(u, v, t)}
    max_t: int = -1

    @classmethod
    def of(cls, constraints: Iterable[Constraint]) -> ConstraintSet:
        vs, es, mt = set(), set(), -1
        for c in constraints:
            if c.kind == "vertex":
                vs.add((c.loc[0], c.t))
            else:
                es.add((c.loc[0], c.loc[1], c.t))
            mt = max(mt, c.t + (c.kind == "edge"))
        return cls(frozenset(vs), frozenset(es), mt)

    def with_vertex(self, v: int, t: int) -> ConstraintSet:
        return ConstraintSet(self.vertex | {(v, t)}, self.edge, max(self.max_t, t))

    def with_edge(self, u: int, v: int, t: int) -> ConstraintSet:
        return ConstraintSet(self.vertex, self.edge | {(u, v, t)}, max(self.max_t, t + 1))


NO_CONSTRAINTS = ConstraintSet()


@dataclass
class FixedObstacles:
    """Paths of agents that are not being replanned, parked at their end forever."""

    vertex: dict = field(default_factory=dict)  # (v, t) -> agent, for t before parking
    parked: dict = field(default_factory=dict)  # v -> (park time, agent)
    moves: dict = field(default_factory=dict)  # (u, v, t) -> agent, move u -> v at t -> t+1
    last_visit: dict = field(default_factory=dict)  # v -> latest t in ``vertex``
    max_t: int = 0

    @classmethod
    def from_paths(cls, paths: Mapping[int, Sequence[int]]) -> FixedObstacles:
        obs = cls()
        for agent, path in paths.items():
            obs.add(agent, path)
        return obs

    def add(self, agent: int, path: Sequence[int]) -> None:
        end = len(path) - 1
        while end > 0 and path[end - 1] == path[-1]:
            end -= 1
        for t in range(end):
            self.vertex[(path[t], t)] = agent
            if self.last_visit.get(path[t], -1) < t:
                self.last_visit[path[t]] = t
            if path[t] != path[t + 1]:
                self.moves[(path[t], path[t + 1], t)] = agent
        self.parked[path[end]] = (end, agent)
        self.max_t = max(self.max_t, end)

    def occupant(self, v: int, t: int) -> int | None:
        a = self.vertex.get((v, t))
        if a is not None:
            return a
        p = self.parked.get(v)
        if p is not None and t >= p[0]:
            return p[1]
        return None

    def blocks(self, u: int, v: int, t: int) -> bool:
        """Would moving ``u -> v`` at ``t -> t+1`` collide with a frozen path?"""
        if self.occupant(v, t + 1) is not None:
            return True
        return u != v and (v, u, t) in self.moves

    def last_goal_block(self, goal: int) -> int | None:
        """Latest time ``goal`` is occupied, or None if someone parks there forever."""
        if goal in self.parked:
            return None
        return self.last_visit.get(goal, -1)


EMPTY_OBSTACLES = FixedObstacles()


def space_time_astar(grid: Grid, start: int, goal: int,
                     constraints: ConstraintSet = NO_CONSTRAINTS,
                     obstacles: FixedObstacles = EMPTY_OBSTACLES,
                     horizon_hint: int = 0, deadline: float | None = None,
                     soft: Mapping[tuple[int, int], int] | None = None,
                     max_cost: int | None = None) -> tuple[int, ...] | None:
    """Cheapest path that ends parked at ``goal``; None if infeasible.

    Cost is the arrival time after which the agent never leaves ``goal``. Past the
    last constrained timestep every state is time-invariant, so states are merged
    there and the search terminates. ``soft`` maps ``(v, t)`` to a penalty used only
    to break ties between equal-cost paths. With ``max_cost`` set, paths costing
    more are treated as infeasible.
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
    static_after = max(constraints.max_t, obstacles.max_t, 0)
    limit = max(static_after, horizon_hint) + grid.node_count + 1

    adj = grid.adj
    cvert, cedge = constraints.vertex, constraints.edge
    overt, oparked, omoves = obstacles.vertex, obstacles.parked, obstacles.moves
    collapse = static_after + 1
    parent: dict = {(start, 0): None}  # state -> previous state; time is explicit
    s0 = soft.get((start, 0), 0) if soft else 0
    # arrival must come after goal_block, which also bounds the remaining time
    arrive = goal_block + 1
    h0 = max(h[start], arrive)
    if max_cost is not None:
        if h0 > max_cost:
            return None
        limit = min(limit, max_cost)
    open_heap = [(h0, s0, h0, 0, start)]
    pushed = {(start, 0): 0}
    closed: set = set()
    expansions = 0
    pop, push = heapq.heappop, heapq.heappush
    while open_heap:
        f, sc, hv, neg_g, v = pop(open_heap)
        t = -neg_g
        key = (v, t if t <= static_after else collapse)
        if key in closed or pushed[key] != t:
            continue
        closed.add(key)
        if v == goal and t > goal_block:
            path = [v]
            state = (v, t)
            while True:
                state = parent[state]
                if state is None:
                    break
                path.append(state[0])
            path.reverse()
            return tuple(path)
        expansions += 1
        if deadline is not None and expansions % CHECK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout
        nt = t + 1
        if nt > limit:
            continue
        nkey_t = nt if nt <= static_after else collapse
        for w in adj[v] + (v,):
            hw = h[w]
            nkey = (w, nkey_t)
            if hw == UNREACHABLE or nkey in closed:
                continue
            old = pushed.get(nkey)
            if old is not None and old <= nt:
                continue
            if (w, nt) in overt or (w, nt) in cvert:
                continue
            p = oparked.get(w)
            if p is not None and nt >= p[0]:
                continue
            if v != w and (w, v, t) in omoves:
                continue
            if cedge and (v, w, t) in cedge:
                continue
            pushed[nkey] = nt
            parent[(w, nt)] = (v, t)
            nsc = sc + soft.get((w, nt), 0) if soft else 0
            if nt + hw < arrive:
                hw = arrive - nt
            if max_cost is not None and nt + hw > max_cost:
                continue
            push(open_heap, (nt + hw, nsc, hw, -nt, w))
    return None


def path_cost(path: Sequence[int]) -> int:
    t = len(path) - 1
    while t > 0 and path[t - 1] == path[-1]:
        t -= 1
    return t
