"""Rules that pick which agents to re-plan together."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..instance import Instance
from ..mdd import build_mdd, prune_mdd
from ..plan import Solution
from ..solver_opt.astar import NO_CONSTRAINTS, FixedObstacles, path_cost, space_time_astar


@dataclass(frozen=True)
class ModificationSet:
    agents: frozenset[int]
    origin: str

    def __post_init__(self):
        if not self.agents:
            raise ValueError("modification set must be nonempty")

    def __len__(self):
        return len(self.agents)


def select_random(solution: Solution, k: int, rng: random.Random) -> ModificationSet:
    if not 1 <= k <= solution.n:
        raise ValueError(f"set size {k} outside [1, {solution.n}]")
    return ModificationSet(frozenset(rng.sample(range(solution.n), k)), "random")


def select_single(solution: Solution, i: int) -> ModificationSet:
    return ModificationSet(frozenset((i,)), "single")


def select_focus_goals(instance: Instance, solution: Solution, i: int) -> ModificationSet:
    """Agents standing on ``g_i`` at some t with dist_i <= t <= cost_i (``a_i`` included)."""
    g = instance.goals[i]
    lo, hi = instance.dist(i), solution.cost(i)
    members = {j for j in range(solution.n)
               if any(solution.loc(j, t) == g for t in range(lo, hi + 1))}
    return ModificationSet(frozenset(members), "focus_goals")


def select_using_mdd(instance: Instance, solution: Solution, i: int) -> ModificationSet:
    """Agents whose paths cut into ``a_i``'s cheaper MDDs.

    For each cost c from dist_i up to (not including) cost_i, the MDD is pruned by
    every other path in index order, cumulatively; any path that removes
    something joins the set.
    """
    members = {i}
    grid = instance.grid
    for c in range(instance.dist(i), solution.cost(i)):
        mdd = build_mdd(grid, instance.starts[i], instance.goals[i], c, i)
        for j in range(solution.n):
            if j == i or mdd.is_empty():
                continue
            mdd, changed = prune_mdd(mdd, solution.paths[j])
            if changed:
                members.add(j)
    return ModificationSet(frozenset(members), "using_mdd")


def select_bottleneck(instance: Instance, solution: Solution, i: int) -> ModificationSet:
    """``a_i`` plus every ``a_j`` that gets cheaper once ``a_i``'s path is ignored."""
    members = {i}
    grid = instance.grid
    for j in range(solution.n):
        if j == i or solution.cost(j) == instance.dist(j):
            continue
        obs = FixedObstacles.from_paths(
            {k: solution.paths[k] for k in range(solution.n) if k not in (i, j)})
        p = space_time_astar(grid, instance.starts[j], instance.goals[j], NO_CONSTRAINTS,
                             obs, solution.horizon)
        if p is not None and path_cost(p) < solution.cost(j):
            members.add(j)
    return ModificationSet(frozenset(members), "bottleneck")


def repair_local_goals(instance: Instance, solution: Solution, i: int) -> tuple[Solution, frozenset] | None:
    """Make ``a_i`` wait on its goal instead of stepping off it, then re-route intruders.

    Applies when ``a_i`` reaches ``g_i`` before its final arrival. The agents that
    stand on ``g_i`` in between are re-planned one by one around everyone else.
    Returns ``(new solution, touched agents)`` only if their total cost drops.
    """
    g = instance.goals[i]
    path = solution.paths[i]
    cost = solution.cost(i)
    first = next(t for t in range(len(path)) if path[t] == g)
    if first >= cost:
        return None
    intruders = sorted({j for j in range(solution.n) if j != i
                        and any(solution.loc(j, t) == g for t in range(first + 1, cost))})
    new_paths = {i: tuple(path[: first + 1])}
    fixed = {k: solution.paths[k] for k in range(solution.n) if k not in intruders}
    fixed[i] = new_paths[i]
    obs = FixedObstacles.from_paths(fixed)
    for j in intruders:
        p = space_time_astar(instance.grid, instance.starts[j], instance.goals[j],
                             NO_CONSTRAINTS, obs, solution.horizon)
        if p is None:
            return None
        new_paths[j] = p
        obs.add(j, p)
    touched = frozenset(new_paths)
    before = sum(solution.cost(k) for k in touched)
    after = sum(path_cost(p) for p in new_paths.values())
    if after >= before:
        return None
    return solution.replace(new_paths), touched
