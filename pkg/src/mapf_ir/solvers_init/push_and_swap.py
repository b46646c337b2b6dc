"""Push and Swap: complete-in-practice rule-based solver moving one agent at a time.

Agents are routed to their goals in index order. An agent walks its shortest path,
pushing unfinished agents out of the way; when pushing fails it exchanges places
with the blocking agent via the swap primitive: both are led to a vertex of degree
at least three, two of its neighbours are emptied, the pair swaps there, and every
preparatory move is replayed backwards so that all other agents end where they
started. A finished agent displaced by a swap steps back onto its goal as soon as
the goal frees up.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

from ..graph import UNREACHABLE, Grid
from ..instance import Instance
from ..plan import Solution


class PushAndSwapFailure(RuntimeError):
    pass


class PushAndSwap:
    def __init__(self, grid: Grid, starts: Sequence[int], goals: Sequence[int],
                 max_moves: int = 500_000, max_junctions: int = 64):
        self.grid = grid
        self.goals = list(goals)
        self.pos = list(starts)
        self.occ = {v: i for i, v in enumerate(starts)}
        self.moves: list[tuple[int, int]] = []  # (from, to), one per timestep
        self.max_moves = max_moves
        self.max_junctions = max_junctions
        self.done: set[int] = set()
        self.displaced: set[int] = set()
        self.junctions = [v for v in range(grid.node_count) if len(grid.adj[v]) >= 3]

    # -- primitive moves -------------------------------------------------

    def _step(self, frm: int, to: int) -> None:
        a = self.occ.pop(frm)
        assert to not in self.occ and (to in self.grid.adj[frm])
        self.occ[to] = a
        self.pos[a] = to
        self.moves.append((frm, to))
        if len(self.moves) > self.max_moves:
            raise PushAndSwapFailure("move budget exhausted")

    def _rollback(self, checkpoint: int) -> None:
        while len(self.moves) > checkpoint:
            frm, to = self.moves.pop()
            a = self.occ.pop(to)
            self.occ[frm] = a
            self.pos[a] = frm

    def _replay_backwards(self, segment: list[tuple[int, int]]) -> None:
        for frm, to in reversed(segment):
            self._step(to, frm)

    def _clear(self, v: int, blocked: set[int]) -> bool:
        """Empty ``v`` by shifting agents toward the nearest free vertex, avoiding ``blocked``."""
        if v not in self.occ:
            return True
        if v in blocked:
            return False
        parent = {v: None}
        queue = deque([v])
        found = None
        while queue and found is None:
            u = queue.popleft()
            for w in self.grid.adj[u]:
                if w in parent or w in blocked:
                    continue
                parent[w] = u
                if w not in self.occ:
                    found = w
                    break
                queue.append(w)
        if found is None:
            return False
        chain = [found]
        while chain[-1] != v:
            chain.append(parent[chain[-1]])
        # chain = [free, ..., v]; shift from the free end backwards
        for to, frm in zip(chain, chain[1:]):
            self._step(frm, to)
        return True

    # -- swap primitive --------------------------------------------------

    def _route(self, src: int, dst: int, avoid: int) -> list[int] | None:
        if src == dst:
            return [src]
        parent = {src: None, avoid: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in self.grid.adj[u]:
                if w in parent:
                    continue
                parent[w] = u
                if w == dst:
                    path = [w]
                    while path[-1] != src:
                        path.append(parent[path[-1]])
                    return path[::-1]
                queue.append(w)
        return None

    def _swap_at(self, r: int, s: int, w: int) -> bool:
        route = self._route(self.pos[r], w, self.pos[s])
        lead, follow = r, s
        if route is None:
            route = self._route(self.pos[s], w, self.pos[r])
            lead, follow = s, r
            if route is None:
                return False
        start = len(self.moves)
        for b in route[1:]:
            if not self._clear(b, {self.pos[lead], self.pos[follow]}):
                return False
            prev = self.pos[lead]
            self._step(prev, b)
            self._step(self.pos[follow], prev)
        f = self.pos[follow]
        cleared: list[int] = []
        for n in sorted(self.grid.adj[w], key=lambda u: (u in self.occ, u)):
            if n == f:
                continue
            if self._clear(n, {w, f, *cleared}):
                cleared.append(n)
                if len(cleared) == 2:
                    break
        if len(cleared) < 2:
            return False
        prep = self.moves[start:]
        n1, n2 = cleared
        self._step(w, n1)   # lead out
        self._step(f, w)    # follow into the junction
        self._step(w, n2)   # follow out the other side
        self._step(n1, w)   # lead back
        self._step(w, f)    # lead takes follow's old vertex
        self._step(n2, w)   # follow takes the junction
        self._replay_backwards(prep)
        return True

    def swap(self, r: int, s: int) -> bool:
        """Exchange the positions of adjacent agents ``r`` and ``s``; others end unchanged."""
        here = self.grid.distance_table(self.pos[r])
        cands = sorted((w for w in self.junctions if here[w] != UNREACHABLE),
                       key=lambda w: (here[w], w))[: self.max_junctions]
        for w in cands:
            checkpoint = len(self.moves)
            if self._swap_at(r, s, w):
                return True
            self._rollback(checkpoint)
        return False

    # -- main loop -------------------------------------------------------

    def _blocked(self, r: int) -> set[int]:
        blocked = {self.pos[r]}
        blocked.update(self.pos[u] for u in self.done)
        blocked.update(self.goals[u] for u in self.displaced)
        return blocked

    def _resolve(self) -> None:
        progress = True
        while progress and self.displaced:
            progress = False
            for s in sorted(self.displaced):
                g = self.goals[s]
                if g not in self.occ and g in self.grid.adj[self.pos[s]]:
                    self._step(self.pos[s], g)
                    self.displaced.discard(s)
                    progress = True

    def _bring_home(self, r: int) -> None:
        while self.pos[r] != self.goals[r]:
            v = self.grid.shortest_path(self.pos[r], self.goals[r])[1]
            owner = self.occ.get(v)
            if owner is None:
                self._step(self.pos[r], v)
            elif owner not in self.done and self._clear(v, self._blocked(r)):
                self._step(self.pos[r], v)
            else:
                if not self.swap(r, owner):
                    raise PushAndSwapFailure(f"agents {r} and {owner} cannot swap")
                if owner in self.done:
                    self.displaced.add(owner)
            self._resolve()

    def solve(self, order: Sequence[int] | None = None) -> list[tuple[int, int]]:
        for r in (order if order is not None else range(len(self.goals))):
            self._bring_home(r)
            self.done.add(r)
            self._resolve()
        if self.displaced:
            raise PushAndSwapFailure("finished agents could not return to their goals")
        return self.moves


def moves_to_paths(starts: Sequence[int], moves: Sequence[tuple[int, int]]) -> list[list[int]]:
    pos = list(starts)
    occ = {v: i for i, v in enumerate(starts)}
    paths = [[v] for v in starts]
    for frm, to in moves:
        a = occ.pop(frm)
        occ[to] = a
        pos[a] = to
        for i, p in enumerate(paths):
            p.append(pos[i])
    return paths


def push_and_swap(instance: Instance, max_moves: int = 500_000) -> Solution | None:
    """Sequential solution (one agent moves per timestep), or None on failure."""
    ps = PushAndSwap(instance.grid, instance.starts, instance.goals, max_moves)
    try:
        moves = ps.solve()
    except PushAndSwapFailure:
        return None
    return Solution.from_paths(moves_to_paths(instance.starts, moves))
