"""PIBT_COMPLETE: PIBT up to the largest start-goal distance, Push and Swap for the rest."""

from __future__ import annotations

from ..instance import Instance
from ..plan import Solution, compress
from .pibt import pibt
from .push_and_swap import push_and_swap


def pibt_complete(instance: Instance) -> Solution | None:
    horizon = max((instance.dist(i) for i in range(instance.n)), default=0)
    traj = pibt(instance, horizon)
    prefix = [list(p) for p in zip(*traj)]
    last = traj[-1]
    if all(v == g for v, g in zip(last, instance.goals)):
        return Solution.from_paths(prefix)
    rest = Instance(instance.grid, tuple(last), instance.goals)
    suffix = push_and_swap(rest)
    if suffix is None:
        return None
    suffix = compress(rest, suffix)
    return Solution.from_paths([p + list(q[1:]) for p, q in zip(prefix, suffix.paths)])
