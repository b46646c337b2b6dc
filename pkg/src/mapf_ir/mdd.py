"""Multi-valued decision diagrams: all cost-``c`` paths of one agent as a layered DAG."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .graph import Grid

VertexFilter = Callable[[int, int], bool]  # (node, t) -> allowed
EdgeFilter = Callable[[int, int, int], bool]  # (u, v, t) for the move t -> t+1 -> allowed


@dataclass
class Mdd:
    """``layers[t]`` holds the nodes usable at timestep ``t``; moves between
    consecutive layers are implicit (neighbor or wait) minus ``removed_edges``."""

    grid: Grid
    start: int
    goal: int
    cost_bound: int
    layers: list[set[int]]
    removed_edges: set[tuple[int, int, int]] = field(default_factory=set)
    agent: int = 0

    def is_empty(self) -> bool:
        return not self.layers or not self.layers[0]

    def vertices(self) -> set[tuple[int, int]]:
        return {(v, t) for t, layer in enumerate(self.layers) for v in layer}

    def successors(self, v: int, t: int) -> list[int]:
        if t >= self.cost_bound:
            return []
        nxt = self.layers[t + 1]
        out = [w for w in self.grid.adj[v] if w in nxt and (t, v, w) not in self.removed_edges]
        if v in nxt and (t, v, v) not in self.removed_edges:
            out.append(v)
        return out

    def predecessors(self, v: int, t: int) -> list[int]:
        if t <= 0:
            return []
        prev = self.layers[t - 1]
        out = [u for u in self.grid.adj[v] if u in prev and (t - 1, u, v) not in self.removed_edges]
        if v in prev and (t - 1, v, v) not in self.removed_edges:
            out.append(v)
        return out

    def paths(self) -> Iterator[tuple[int, ...]]:
        """Enumerate every start-to-goal path in the diagram (small MDDs only)."""
        if self.is_empty():
            return

        def rec(prefix: list[int]) -> Iterator[tuple[int, ...]]:
            t = len(prefix) - 1
            if t == self.cost_bound:
                yield tuple(prefix)
                return
            for w in self.successors(prefix[-1], t):
                prefix.append(w)
                yield from rec(prefix)
                prefix.pop()

        yield from rec([self.start])

    def copy(self) -> Mdd:
        return Mdd(self.grid, self.start, self.goal, self.cost_bound,
                   [set(layer) for layer in self.layers], set(self.removed_edges), self.agent)

    def _clean(self) -> bool:
        """Drop vertices off every start-to-goal path; True if anything was dropped."""
        changed = False
        c = self.cost_bound
        if self.start not in self.layers[0] or self.goal not in self.layers[c]:
            if any(self.layers):
                changed = True
            self.layers = [set() for _ in range(c + 1)]
            return changed
        for t in range(1, c + 1):
            dead = [v for v in self.layers[t] if not self.predecessors(v, t)]
            if dead:
                changed = True
                self.layers[t].difference_update(dead)
        for t in range(c - 1, -1, -1):
            dead = [v for v in self.layers[t] if not self.successors(v, t)]
            if dead:
                changed = True
                self.layers[t].difference_update(dead)
        if not self.layers[0] or not self.layers[c]:
            self.layers = [set() for _ in range(c + 1)]
        return changed

    def _remove(self, vertices: Sequence[tuple[int, int]],
                edges: Sequence[tuple[int, int, int]]) -> None:
        """Delete the given vertices and edges, then everything left dangling."""
        c = self.cost_bound
        layers = self.layers
        work: list[tuple[int, int]] = []
        self.removed_edges.update(edges)
        for t, u, w in edges:
            work.append((u, t))
            work.append((w, t + 1))
        for v, t in vertices:
            if v in layers[t]:
                layers[t].discard(v)
                work.extend((u, t - 1) for u in self.grid.adj[v] + (v,) if t > 0)
                work.extend((w, t + 1) for w in self.grid.adj[v] + (v,) if t < c)
        while work:
            v, t = work.pop()
            if v not in layers[t]:
                continue
            if (t > 0 and not self.predecessors(v, t)) or (t < c and not self.successors(v, t)):
                layers[t].discard(v)
                if t > 0:
                    work.extend((u, t - 1) for u in self.grid.adj[v] + (v,))
                if t < c:
                    work.extend((w, t + 1) for w in self.grid.adj[v] + (v,))
        if self.start not in layers[0] or self.goal not in layers[c]:
            self.layers = [set() for _ in range(c + 1)]


def build_mdd(grid: Grid, start: int, goal: int, c: int, agent: int = 0,
              vertex_ok: VertexFilter | None = None,
              edge_ok: EdgeFilter | None = None) -> Mdd:
    """MDD of all length-``c`` paths from ``start`` to ``goal``.

    The optional filters restrict it further (used for constrained CBS low-level
    searches); without them a vertex ``(v, t)`` is kept iff ``dist(start, v) <= t``
    and ``t + dist(v, goal) <= c``.
    """
    from_start = grid.distance_table(start)
    to_goal = grid.distance_table(goal)
    if c < 0 or to_goal[start] > c:
        return Mdd(grid, start, goal, max(c, 0), [set() for _ in range(max(c, 0) + 1)], agent=agent)
    layers: list[set[int]] = []
    if vertex_ok is None and edge_ok is None:
        # ball around start intersected with ball around goal, per layer
        candidates = [v for v in range(grid.node_count)
                      if from_start[v] + to_goal[v] <= c]
        for t in range(c + 1):
            layers.append({v for v in candidates if from_start[v] <= t and to_goal[v] <= c - t})
        return Mdd(grid, start, goal, c, layers, agent=agent)

    # forward expansion under the filters, then a backward sweep
    removed: set[tuple[int, int, int]] = set()
    layer = {start} if (vertex_ok is None or vertex_ok(start, 0)) else set()
    layers.append(layer)
    for t in range(c):
        nxt: set[int] = set()
        for u in layer:
            for w in grid.adj[u] + (u,):
                if to_goal[w] > c - t - 1:
                    continue
                if vertex_ok is not None and not vertex_ok(w, t + 1):
                    continue
                if edge_ok is not None and not edge_ok(u, w, t):
                    removed.add((t, u, w))
                    continue
                nxt.add(w)
        layers.append(nxt)
        layer = nxt
    mdd = Mdd(grid, start, goal, c, layers, removed, agent)
    mdd._clean()
    return mdd


def prune_mdd(mdd: Mdd, other_path: Sequence[int]) -> tuple[Mdd, bool]:
    """Remove what collides with ``other_path`` (parked at its end), then tidy up.

    Vertex conflicts drop vertices, swap conflicts drop edges. If ``other_path``
    occupies the goal at or after ``cost_bound`` the goal vertex goes too, since the
    agent could not stay there. Returns the input object itself when nothing collides.
    """
    if mdd.is_empty():
        return mdd, False
    c = mdd.cost_bound
    layers = mdd.layers
    last = len(other_path) - 1

    def at(t: int) -> int:
        return other_path[t] if t <= last else other_path[last]

    dead_vertices = [(at(t), t) for t in range(c + 1) if at(t) in layers[t]]
    if (mdd.goal in layers[c] and (mdd.goal, c) not in dead_vertices
            and any(at(t) == mdd.goal for t in range(c, max(c, last) + 1))):
        dead_vertices.append((mdd.goal, c))
    adj = mdd.grid.adj
    dead_edges = []
    for t in range(c):
        u, w = at(t), at(t + 1)
        # agent moving w -> u while the other moves u -> w
        if (u != w and w in layers[t] and u in layers[t + 1] and u in adj[w]
                and (t, w, u) not in mdd.removed_edges):
            dead_edges.append((t, w, u))
    if not dead_vertices and not dead_edges:
        return mdd, False
    out = mdd.copy()
    out._remove(dead_vertices, dead_edges)
    return out, True


