"""Four-connected grid graphs and the cached shortest-path distance oracle."""

from __future__ import annotations

import math
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

PASSABLE_GLYPHS = frozenset(".G")
KNOWN_GLYPHS = frozenset(".G@TOSW")

UNREACHABLE = math.inf


class MapParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(eq=False)
class Grid:
    """Passable cells of a width x height grid, numbered row-major.

    ``adj[v]`` lists the neighbors of node ``v`` in ascending NodeId order.
    ``coords[v]`` is the ``(x, y)`` cell of ``v``.
    """

    width: int
    height: int
    passable: tuple[bool, ...]
    adj: tuple[tuple[int, ...], ...]
    coords: tuple[tuple[int, int], ...]
    _cell_to_node: dict[tuple[int, int], int] = field(repr=False)
    _tables: dict[int, list] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def node_count(self) -> int:
        return len(self.adj)

    @classmethod
    def from_mask(cls, mask: Sequence[Sequence[bool]]) -> Grid:
        """Build from ``mask[y][x]`` (True = passable)."""
        height = len(mask)
        width = len(mask[0]) if height else 0
        if width <= 0 or height <= 0:
            raise ValueError("grid must have positive width and height")
        passable = tuple(bool(mask[y][x]) for y in range(height) for x in range(width))
        cell_to_node: dict[tuple[int, int], int] = {}
        coords = []
        for y in range(height):
            for x in range(width):
                if passable[y * width + x]:
                    cell_to_node[(x, y)] = len(coords)
                    coords.append((x, y))
        adj = []
        for x, y in coords:
            nbrs = []
            for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
                u = cell_to_node.get((x + dx, y + dy))
                if u is not None:
                    nbrs.append(u)
            adj.append(tuple(sorted(nbrs)))
        return cls(width, height, passable, tuple(adj), tuple(coords), cell_to_node)

    @classmethod
    def from_adjacency(cls, n: int, edges: Iterable[tuple[int, int]]) -> Grid:
        """Arbitrary undirected graph on nodes ``0..n-1``.

        For hand-built gadget graphs in tests; node ``v`` gets the fake cell ``(v, 0)``.
        """
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError("self loops are not edges")
            nbrs[u].add(v)
            nbrs[v].add(u)
        coords = tuple((v, 0) for v in range(n))
        return cls(
            n, 1, (True,) * n,
            tuple(tuple(sorted(s)) for s in nbrs),
            coords,
            {c: v for v, c in enumerate(coords)},
        )

    def node_at(self, x: int, y: int) -> int | None:
        return self._cell_to_node.get((x, y))

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def distance_table(self, goal: int) -> list:
        """BFS distances to ``goal`` from every node; built once per goal."""
        table = self._tables.get(goal)
        if table is not None:
            return table
        with self._lock:
            table = self._tables.get(goal)
            if table is None:
                table = bfs_distances(self.adj, goal)
                self._tables[goal] = table
        return table

    def dist(self, u: int, v: int) -> int | float:
        return self.distance_table(v)[u]

    def shortest_path(self, u: int, v: int) -> list[int] | None:
        """One shortest path, greedily descending the distance table (ties to lower id)."""
        table = self.distance_table(v)
        if table[u] == UNREACHABLE:
            return None
        path = [u]
        while path[-1] != v:
            cur = path[-1]
            path.append(min(self.adj[cur], key=lambda w: (table[w], w)))
        return path


def bfs_distances(adj: Sequence[Sequence[int]], source: int) -> list:
    dist: list = [UNREACHABLE] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        d = dist[u] + 1
        for w in adj[u]:
            if dist[w] == UNREACHABLE:
                dist[w] = d
                queue.append(w)
    return dist


def neighbors(grid: Grid, v: int) -> set[int]:
    return set(grid.adj[v])


def dist(grid: Grid, u: int, v: int) -> int | float:
    return grid.dist(u, v)


def parse_map(text: str | Iterable[str]) -> Grid:
    """Parse a MovingAI ``.map`` file (octile header, then rows of glyphs)."""
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\r\n") for ln in text]
    header: dict[str, str] = {}
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped == "map":
            break
        parts = stripped.split()
        if len(parts) != 2:
            raise MapParseError(lineno, f"malformed header line {line!r}")
        header[parts[0].lower()] = parts[1]
    else:
        raise MapParseError(max(lineno, 1), "missing 'map' line")
    for key in ("type", "height", "width"):
        if key not in header:
            raise MapParseError(lineno, f"header is missing '{key}'")
    try:
        height, width = int(header["height"]), int(header["width"])
    except ValueError:
        raise MapParseError(lineno, "height/width must be integers") from None
    if height <= 0 or width <= 0:
        raise MapParseError(lineno, "height/width must be positive")

    rows = lines[lineno:lineno + height]
    if len(rows) < height:
        raise MapParseError(lineno + len(rows) + 1, f"expected {height} map rows, got {len(rows)}")
    mask = []
    for y, row in enumerate(rows):
        row_lineno = lineno + 1 + y
        row = row.rstrip("\r\n")
        if len(row) != width:
            raise MapParseError(row_lineno, f"row has length {len(row)}, expected {width}")
        for x, ch in enumerate(row):
            if ch not in KNOWN_GLYPHS:
                raise MapParseError(row_lineno, f"unknown glyph {ch!r} at column {x}")
        mask.append([ch in PASSABLE_GLYPHS for ch in row])
    return Grid.from_mask(mask)


def format_map(grid: Grid) -> str:
    rows = []
    for y in range(grid.height):
        rows.append("".join(
            "." if grid.passable[y * grid.width + x] else "@" for x in range(grid.width)
        ))
    return "type octile\nheight {}\nwidth {}\nmap\n{}\n".format(
        grid.height, grid.width, "\n".join(rows)
    )


def load_map(path) -> Grid:
    with open(path) as f:
        return parse_map(f.read())


def bundled_map(name: str) -> Grid:
    """Load one of the maps shipped in ``mapf_ir/maps`` (e.g. ``"random-32-32-20"``)."""
    from importlib.resources import files

    return parse_map(files("mapf_ir").joinpath("maps", f"{name}.map").read_text())


def random_grid(width: int, height: int, obstacles: int, seed: int) -> Grid:
    """Grid with exactly ``obstacles`` blocked cells whose free cells stay connected."""
    if not 0 <= obstacles < width * height:
        raise ValueError("obstacle count out of range")
    rng = random.Random(seed)
    mask = [[True] * width for _ in range(height)]
    cells = [(x, y) for y in range(height) for x in range(width)]
    rng.shuffle(cells)
    free = width * height
    placed = 0
    for x, y in cells:
        if placed == obstacles:
            break
        mask[y][x] = False
        if _free_connected(mask, free - 1):
            placed += 1
            free -= 1
        else:
            mask[y][x] = True
    if placed != obstacles:
        raise ValueError("could not place obstacles without disconnecting the grid")
    return Grid.from_mask(mask)


def _free_connected(mask: list[list[bool]], free: int) -> bool:
    height, width = len(mask), len(mask[0])
    start = next((x, y) for y in range(height) for x in range(width) if mask[y][x])
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < width and 0 <= ny < height and mask[ny][nx] and (nx, ny) not in seen:
                seen.add((nx, ny))
                stack.append((nx, ny))
    return len(seen) == free
