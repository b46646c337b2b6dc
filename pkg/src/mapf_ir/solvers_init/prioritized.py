"""Prioritized planning: HCA* and its windowed variant WHCA*."""

from __future__ import annotations

import random
from typing import Sequence

from ..instance import Instance
from ..plan import Solution
from ..solver_opt.astar import NO_CONSTRAINTS, FixedObstacles, space_time_astar


def default_order(instance: Instance, seed: int | None = None) -> list[int]:
    """Farthest agent first; a seed shuffles instead."""
    order = list(range(instance.n))
    if seed is not None:
        random.Random(seed).shuffle(order)
        return order
    return sorted(order, key=lambda i: (-instance.dist(i), i))


def hca(instance: Instance, order: Sequence[int] | None = None) -> Solution | None:
    if order is None:
        order = default_order(instance)
    reserved = FixedObstacles()
    paths: dict[int, tuple[int, ...]] = {}
    hint = 0
    for i in order:
        p = space_time_astar(instance.grid, instance.starts[i], instance.goals[i],
                             NO_CONSTRAINTS, reserved, hint)
        if p is None:
            return None
        paths[i] = p
        reserved.add(i, p)
        hint = max(hint, len(p) - 1)
    return Solution.from_paths([paths[i] for i in range(instance.n)])


def _reserve_window(obs: FixedObstacles, agent: int, p: Sequence[int], window: int) -> None:
    """Reserve ``p`` for t <= ``window`` only; nobody parks forever."""
    for t in range(window + 1):
        v = p[t] if t < len(p) else p[-1]
        obs.vertex[(v, t)] = agent
        if obs.last_visit.get(v, -1) < t:
            obs.last_visit[v] = t
        if t < window:
            w = p[t + 1] if t + 1 < len(p) else p[-1]
            if v != w:
                obs.moves[(v, w, t)] = agent
    obs.max_t = window


def whca(instance: Instance, window: int, order: Sequence[int] | None = None,
         max_windows: int | None = None) -> Solution | None:
    """Plan ``window`` steps at a time, checking conflicts only inside the window.

    Returns None if some agent has no windowed path or if ``max_windows``
    (default ``4 * |V|``) windows pass without everyone resting on their goal.
    Window planning depends only on the configuration, so a repeated configuration
    is an endless cycle and fails at once.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if order is None:
        order = default_order(instance)
    if max_windows is None:
        max_windows = 4 * instance.grid.node_count
    grid = instance.grid
    config = list(instance.starts)
    history = [[v] for v in config]
    seen = set()
    for _ in range(max_windows):
        if all(v == g for v, g in zip(config, instance.goals)):
            return Solution.from_paths(history)
        if tuple(config) in seen:
            return None
        seen.add(tuple(config))
        planned: dict[int, Sequence[int]] = {}
        obs = FixedObstacles()
        for i in order:
            p = space_time_astar(grid, config[i], instance.goals[i], NO_CONSTRAINTS, obs)
            if p is None:
                return None
            planned[i] = p
            _reserve_window(obs, i, p, window)
        for i in range(instance.n):
            p = planned[i]
            step = [p[t] if t < len(p) else p[-1] for t in range(1, window + 1)]
            history[i].extend(step)
            config[i] = step[-1]
    if all(v == g for v, g in zip(config, instance.goals)):
        return Solution.from_paths(history)
    return None
