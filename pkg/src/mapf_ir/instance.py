"""MAPF instances: scenario files, random generation, well-formedness."""

from __future__ import annotations

import os
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import UNREACHABLE, Grid, load_map


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    grid: Grid
    starts: tuple[int, ...]
    goals: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "starts", tuple(self.starts))
        object.__setattr__(self, "goals", tuple(self.goals))
        if len(self.starts) != len(self.goals):
            raise ValueError("starts and goals differ in length")
        if len(set(self.starts)) != len(self.starts):
            raise ValueError("starts are not pairwise distinct")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goals are not pairwise distinct")
        for i, (s, g) in enumerate(zip(self.starts, self.goals)):
            if self.grid.dist(s, g) == UNREACHABLE:
                raise ValueError(f"agent {i}: goal unreachable from start")

    @property
    def n(self) -> int:
        return len(self.starts)

    def dist(self, i: int) -> int:
        """Shortest-path length from agent ``i``'s start to its goal."""
        return self.grid.dist(self.starts[i], self.goals[i])

    def lower_bound(self) -> int:
        return sum(self.dist(i) for i in range(self.n))

    def key(self) -> tuple:
        """Hashable identity of the agent set (used to match instances across solvers)."""
        return (self.grid.width, self.grid.height, self.starts, self.goals)


def parse_scen(text: str, grid: Grid, n: int | None = None) -> Instance:
    """Read the first ``n`` agents of a MovingAI ``.scen`` (version 1) file."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lower().startswith("version"):
            continue
        cols = line.split("\t")
        if len(cols) < 9:
            cols = line.split()
        if len(cols) < 9:
            raise ScenarioError(f"line {lineno}: expected 9 columns, got {len(cols)}")
        try:
            width, height = int(cols[2]), int(cols[3])
            sx, sy, gx, gy = (int(c) for c in cols[4:8])
        except ValueError:
            raise ScenarioError(f"line {lineno}: non-integer field") from None
        # cols[8] (octile optimal length) is not meaningful on a 4-connected grid
        entries.append((lineno, width, height, sx, sy, gx, gy))

    if n is None:
        n = len(entries)
    if n > len(entries):
        raise ScenarioError(f"requested {n} agents but scenario has {len(entries)} entries")
    starts, goals = [], []
    for k, (lineno, width, height, sx, sy, gx, gy) in enumerate(entries[:n]):
        if (width, height) != (grid.width, grid.height):
            raise ScenarioError(
                f"entry {k} (line {lineno}): map is {width}x{height}, grid is {grid.width}x{grid.height}"
            )
        s, g = grid.node_at(sx, sy), grid.node_at(gx, gy)
        if s is None:
            raise ScenarioError(f"entry {k} (line {lineno}): start ({sx},{sy}) is blocked")
        if g is None:
            raise ScenarioError(f"entry {k} (line {lineno}): goal ({gx},{gy}) is blocked")
        starts.append(s)
        goals.append(g)
    try:
        return Instance(grid, tuple(starts), tuple(goals))
    except ValueError as e:
        raise ScenarioError(str(e)) from None


def format_scen(instance: Instance, map_name: str = "map.map") -> str:
    grid = instance.grid
    lines = ["version 1"]
    for s, g in zip(instance.starts, instance.goals):
        (sx, sy), (gx, gy) = grid.coords[s], grid.coords[g]
        lines.append("\t".join(str(c) for c in (
            0, map_name, grid.width, grid.height, sx, sy, gx, gy, float(grid.dist(s, g))
        )))
    return "\n".join(lines) + "\n"


def load_scen(path, grid: Grid, n: int | None = None) -> Instance:
    with open(path) as f:
        return parse_scen(f.read(), grid, n)


def parse_plain(text: str, grid: Grid | None = None, base_dir: str = ".") -> Instance:
    """Plain instance format: ``map=<path>`` then one ``sx sy gx gy`` line per agent.

    Pass ``grid`` to skip loading the map (gadget graphs built in code).
    """
    starts, goals = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("map="):
            if grid is None:
                grid = load_map(os.path.join(base_dir, line[4:].strip()))
            continue
        if grid is None:
            raise ScenarioError(f"line {lineno}: agent line before map=")
        try:
            sx, sy, gx, gy = (int(c) for c in line.split())
        except ValueError:
            raise ScenarioError(f"line {lineno}: expected 'sx sy gx gy'") from None
        s, g = grid.node_at(sx, sy), grid.node_at(gx, gy)
        if s is None or g is None:
            raise ScenarioError(f"line {lineno}: endpoint on a blocked or missing cell")
        starts.append(s)
        goals.append(g)
    if grid is None:
        raise ScenarioError("no map= line")
    return Instance(grid, tuple(starts), tuple(goals))


def format_plain(instance: Instance, map_path: str) -> str:
    coords = instance.grid.coords
    lines = [f"map={map_path}"]
    for s, g in zip(instance.starts, instance.goals):
        lines.append("{} {} {} {}".format(*coords[s], *coords[g]))
    return "\n".join(lines) + "\n"


def random_instance(grid: Grid, n: int, seed: int, max_tries: int = 1000) -> Instance:
    """Distinct random starts and distinct random goals (a goal may be another agent's start)."""
    if n > grid.node_count:
        raise ValueError(f"{n} agents do not fit on {grid.node_count} nodes")
    rng = random.Random(seed)
    for _ in range(max_tries):
        starts = rng.sample(range(grid.node_count), n)
        goals = rng.sample(range(grid.node_count), n)
        if all(grid.dist(s, g) != UNREACHABLE for s, g in zip(starts, goals)):
            return Instance(grid, tuple(starts), tuple(goals))
    raise ValueError("could not sample mutually reachable start/goal pairs")


def _reachable_avoiding(adj: Sequence[Sequence[int]], s: int, g: int, removed: set[int]) -> bool:
    if s == g:
        return True
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w == g:
                return True
            if w not in seen and w not in removed:
                seen.add(w)
                queue.append(w)
    return False


def is_well_formed(instance: Instance) -> bool:
    """Every agent can reach its goal without touching any other agent's start or goal."""
    endpoints: Iterable[int] = set(instance.starts) | set(instance.goals)
    for s, g in zip(instance.starts, instance.goals):
        removed = set(endpoints) - {s, g}
        if not _reachable_avoiding(instance.grid.adj, s, g, removed):
            return False
    return True
