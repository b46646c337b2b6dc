"""Solutions, sum-of-costs, conflict validation and post-hoc compression."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .graph import Grid
from .instance import Instance

Path = tuple[int, ...]


def agent_cost(path: Sequence[int]) -> int:
    """Earliest timestep after which the agent never leaves its final location."""
    t = len(path) - 1
    last = path[t]
    while t > 0 and path[t - 1] == last:
        t -= 1
    return t


def trim(path: Sequence[int]) -> Path:
    return tuple(path[: agent_cost(path) + 1])


@dataclass(frozen=True, eq=False)
class Solution:
    """Per-agent paths padded to a common horizon by repeating the last location."""

    paths: tuple[Path, ...]

    @classmethod
    def from_paths(cls, paths: Sequence[Sequence[int]]) -> Solution:
        trimmed = [trim(p) for p in paths]
        horizon = max((len(p) - 1 for p in trimmed), default=0)
        return cls(tuple(p + (p[-1],) * (horizon - len(p) + 1) for p in trimmed))

    @property
    def horizon(self) -> int:
        return len(self.paths[0]) - 1 if self.paths else 0

    @property
    def n(self) -> int:
        return len(self.paths)

    def cost(self, i: int) -> int:
        return agent_cost(self.paths[i])

    def costs(self) -> list[int]:
        return [agent_cost(p) for p in self.paths]

    def sum_of_costs(self) -> int:
        return sum(self.costs())

    def loc(self, i: int, t: int) -> int:
        p = self.paths[i]
        return p[t] if t < len(p) else p[-1]

    def padded(self, horizon: int) -> Solution:
        if horizon < self.horizon:
            raise ValueError("cannot pad below the current horizon")
        return Solution(tuple(p + (p[-1],) * (horizon - len(p) + 1) for p in self.paths))

    def replace(self, new_paths: dict[int, Sequence[int]]) -> Solution:
        paths = list(self.paths)
        for i, p in new_paths.items():
            paths[i] = tuple(p)
        return Solution.from_paths(paths)

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return [trim(p) for p in self.paths] == [trim(p) for p in other.paths]

    def __hash__(self):
        return hash(tuple(trim(p) for p in self.paths))


def sum_of_costs(solution: Solution) -> int:
    return solution.sum_of_costs()


@dataclass(frozen=True)
class ConflictReport:
    kind: str  # "vertex" | "swap"
    agents: tuple[int, int]
    timestep: int
    locations: tuple[int, ...]


@dataclass(frozen=True)
class StructuralError:
    kind: str  # "path_count" | "start" | "goal" | "move" | "node"
    agent: int
    timestep: int
    detail: str = ""


def validate(instance: Instance, solution: Solution) -> list:
    """All structural errors and conflicts in ``solution``; an empty list means valid."""
    issues: list = []
    grid = instance.grid
    if solution.n != instance.n:
        return [StructuralError("path_count", -1, 0, f"{solution.n} paths for {instance.n} agents")]
    horizon = max((len(p) - 1 for p in solution.paths), default=0)
    for i, p in enumerate(solution.paths):
        if not p:
            issues.append(StructuralError("path_count", i, 0, "empty path"))
            continue
        if any(not 0 <= v < grid.node_count for v in p):
            issues.append(StructuralError("node", i, 0, "unknown node id"))
            continue
        if p[0] != instance.starts[i]:
            issues.append(StructuralError("start", i, 0))
        if p[-1] != instance.goals[i]:
            issues.append(StructuralError("goal", i, len(p) - 1))
        for t in range(len(p) - 1):
            if p[t] != p[t + 1] and p[t + 1] not in grid.adj[p[t]]:
                issues.append(StructuralError("move", i, t, f"{p[t]}->{p[t + 1]}"))
    if issues:
        return issues
    issues.extend(find_conflicts(solution.paths, horizon))
    return issues


def find_conflicts(paths: Sequence[Sequence[int]], horizon: int | None = None,
                   first_only: bool = False) -> list[ConflictReport]:
    """Vertex and swap conflicts between paths; agents park at their last location."""
    if horizon is None:
        horizon = max((len(p) - 1 for p in paths), default=0)
    found: list[ConflictReport] = []
    for t in range(horizon + 1):
        here: dict[int, int] = {}
        crowd: dict[int, list[int]] = {}
        for i, p in enumerate(paths):
            v = p[t] if t < len(p) else p[-1]
            j = here.get(v)
            if j is not None:
                for k in crowd.setdefault(v, [j]):
                    found.append(ConflictReport("vertex", (k, i), t, (v,)))
                    if first_only:
                        return found
                crowd[v].append(i)
            else:
                here[v] = i
        if t > 0:
            moved: dict[tuple[int, int], list[int]] = {}
            for i, p in enumerate(paths):
                u = p[t - 1] if t - 1 < len(p) else p[-1]
                v = p[t] if t < len(p) else p[-1]
                if u == v:
                    continue
                for j in moved.get((v, u), ()):
                    found.append(ConflictReport("swap", (j, i), t - 1, (v, u)))
                    if first_only:
                        return found
                moved.setdefault((u, v), []).append(i)
    return found


def is_valid(instance: Instance, solution: Solution) -> bool:
    return not validate(instance, solution)


def compress(instance: Instance, solution: Solution) -> Solution:
    """Shift every move as early as possible while keeping each node's visiting order.

    Each agent's path is reduced to its sequence of node visits; a visit may start once
    the agent's previous visit has started a step earlier and the previous visitor of
    the node has moved on. Keeping the per-node order of a valid solution rules out
    both vertex and swap conflicts, and every visit starts no later than before.
    """
    visits: list[list[tuple[int, int]]] = []  # per agent: (node, original entry time)
    for p in solution.paths:
        seq = [(p[0], 0)]
        for t in range(1, len(p)):
            if p[t] != p[t - 1]:
                seq.append((p[t], t))
        visits.append(seq)

    # predecessor visit at the same node, as (agent, visit index)
    by_node: dict[int, list[tuple[int, int, int]]] = defaultdict(list)
    for i, seq in enumerate(visits):
        for k, (v, t) in enumerate(seq):
            by_node[v].append((t, i, k))
    pred: dict[tuple[int, int], tuple[int, int]] = {}
    for entries in by_node.values():
        entries.sort()
        for (_, i0, k0), (_, i1, k1) in zip(entries, entries[1:]):
            pred[(i1, k1)] = (i0, k0)

    # process visits in original entry order; same-time visits may depend on each other
    order = sorted(((t, i, k) for i, seq in enumerate(visits) for k, (_, t) in enumerate(seq)))
    start: dict[tuple[int, int], int] = {}
    idx = 0
    while idx < len(order):
        t0 = order[idx][0]
        group = []
        while idx < len(order) and order[idx][0] == t0:
            group.append((order[idx][1], order[idx][2]))
            idx += 1
        pending = group
        while pending:
            waiting = []
            for i, k in pending:
                earliest = start[(i, k - 1)] + 1 if k > 0 else 0
                p = pred.get((i, k))
                if p is not None:
                    pi, pk = p
                    leave = (pi, pk + 1)
                    if leave not in start:
                        if pk + 1 >= len(visits[pi]):
                            raise ValueError("solution visits a node after another agent parked there")
                        waiting.append((i, k))
                        continue
                    earliest = max(earliest, start[leave])
                start[(i, k)] = earliest
            if len(waiting) == len(pending):
                raise ValueError("cyclic visit dependencies; input solution is not valid")
            pending = waiting

    paths = []
    for i, seq in enumerate(visits):
        path: list[int] = []
        for k, (v, _) in enumerate(seq):
            t = start[(i, k)]
            if path:
                path.extend([path[-1]] * (t - len(path)))
            path.append(v)
        paths.append(path)
    return Solution.from_paths(paths)


_COORD = re.compile(r"\((-?\d+),(-?\d+)\)")


def format_solution(grid: Grid, solution: Solution) -> str:
    lines = []
    for p in solution.paths:
        lines.append(",".join("({},{})".format(*grid.coords[v]) for v in p))
    return "\n".join(lines) + "\n"


def parse_solution(grid: Grid, text: str) -> Solution:
    paths = []
    for line in text.splitlines():
        if not line.strip():
            continue
        path = []
        for x, y in _COORD.findall(line):
            v = grid.node_at(int(x), int(y))
            if v is None:
                raise ValueError(f"({x},{y}) is not a passable cell")
            path.append(v)
        paths.append(path)
    return Solution.from_paths(paths)
