"""Priority Inheritance with Backtracking: one-timestep planning for all agents."""

from __future__ import annotations

import sys
from typing import Sequence

from ..instance import Instance
from ..plan import Solution


class PIBT:
    """Stateful PIBT runner; ``step()`` advances every agent by one timestep.

    Priority is (steps since the agent was last at its goal, lower index first).
    """

    def __init__(self, instance: Instance, config: Sequence[int] | None = None):
        self.instance = instance
        self.grid = instance.grid
        self.goals = instance.goals
        self.n = instance.n
        self.config = list(config if config is not None else instance.starts)
        self.elapsed = [0] * self.n
        self.tables = [self.grid.distance_table(g) for g in self.goals]

    def all_at_goals(self) -> bool:
        return all(v == g for v, g in zip(self.config, self.goals))

    def step(self) -> list[int]:
        cur = self.config
        occ_now = {v: i for i, v in enumerate(cur)}
        occ_next: dict[int, int] = {}
        nxt: list[int | None] = [None] * self.n
        order = sorted(range(self.n), key=lambda i: (-self.elapsed[i], i))

        def plan(i: int, parent: int | None) -> bool:
            table = self.tables[i]
            here = cur[i]
            cands = sorted(self.grid.adj[here] + (here,),
                           key=lambda v: (table[v], v in occ_now and v != here, v))
            for v in cands:
                if v in occ_next:
                    continue
                if parent is not None and v == cur[parent]:
                    continue
                k = occ_now.get(v)
                if k is not None and k != i and nxt[k] == here:
                    continue  # k already moves into our cell: swap
                nxt[i] = v
                occ_next[v] = i
                if k is not None and k != i and nxt[k] is None:
                    if not plan(k, i):
                        nxt[i] = None  # k failed and stays put, keeping v reserved
                        continue
                return True
            nxt[i] = here
            occ_next[here] = i
            return False

        for i in order:
            if nxt[i] is None:
                plan(i, None)
        self.config = [v for v in nxt]
        for i in range(self.n):
            self.elapsed[i] = 0 if self.config[i] == self.goals[i] else self.elapsed[i] + 1
        return self.config


def _run(instance: Instance, horizon: int, stop_at_goals: bool) -> tuple[list[list[int]], bool]:
    runner = PIBT(instance)
    traj = [list(instance.starts)]
    limit = sys.getrecursionlimit()
    if limit < instance.n + 100:
        sys.setrecursionlimit(instance.n + 100)
    for _ in range(horizon):
        if stop_at_goals and runner.all_at_goals():
            break
        traj.append(runner.step())
    return traj, runner.all_at_goals()


def pibt(instance: Instance, horizon: int) -> list[list[int]]:
    """Configurations at t = 0..horizon (agents need not be at goals at the end)."""
    traj, _ = _run(instance, horizon, stop_at_goals=False)
    return traj


def pibt_solve(instance: Instance, max_steps: int | None = None) -> Solution | None:
    """Run PIBT until everyone stands on their goal at once; None if ``max_steps`` pass first."""
    if max_steps is None:
        max_steps = 4 * instance.grid.node_count + max(instance.dist(i) for i in range(instance.n))
    traj, done = _run(instance, max_steps, stop_at_goals=True)
    if not done:
        return None
    return Solution.from_paths(list(zip(*traj)))


def trajectory_paths(traj: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    return [tuple(p) for p in zip(*traj)]
