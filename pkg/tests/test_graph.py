import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapf_ir.graph import (
    UNREACHABLE, Grid, MapParseError, bundled_map, dist, format_map, neighbors, parse_map,
    random_grid,
)

from oracles import bfs


def grid_text(rows):
    return "type octile\nheight {}\nwidth {}\nmap\n{}\n".format(len(rows), len(rows[0]), "\n".join(rows))


def test_open_3x3():
    g = parse_map(grid_text(["...", "...", "..."]))
    assert g.node_count == 9
    assert len(neighbors(g, g.node_at(1, 1))) == 4
    assert len(neighbors(g, g.node_at(0, 0))) == 2
    assert dist(g, g.node_at(0, 0), g.node_at(2, 2)) == 4
    assert dist(g, 4, 4) == 0


def test_blocked_glyphs_and_count():
    g = parse_map(grid_text([".@", ".."]))
    assert g.node_count == 3
    g = parse_map(grid_text([".GT", "OSW"]))
    assert g.node_count == 2


def test_isolated_cell_has_no_neighbors():
    g = parse_map(grid_text(["@.@", ".@.", "@.@"]))
    v = g.node_at(1, 0)
    assert neighbors(g, v) == set()
    assert dist(g, v, g.node_at(0, 1)) == UNREACHABLE


def test_row_major_ids():
    g = parse_map(grid_text(["..", "@."]))
    assert g.coords == ((0, 0), (1, 0), (1, 1))
    assert all(g.node_at(*g.coords[v]) == v for v in range(g.node_count))


@pytest.mark.parametrize("text, line", [
    ("type octile\nheight 2\nmap\n..\n..\n", 3),
    ("type octile\nheight 2\nwidth 2\nmap\n..\n.\n", 6),
    ("type octile\nheight 2\nwidth 2\nmap\n..\n.x\n", 6),
    ("type octile\nheight 3\nwidth 2\nmap\n..\n..\n", 7),
    ("type octile\nheight two\nwidth 2\nmap\n..\n..\n", 4),
    ("type octile\nbogus\n", 2),
])
def test_parse_errors_name_line(text, line):
    with pytest.raises(MapParseError) as exc:
        parse_map(text)
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_bundled_map_sizes():
    assert bundled_map("random-32-32-20").node_count == 819
    g = bundled_map("random-64-64-20")
    assert (g.width, g.height) == (64, 64)


def test_format_roundtrip():
    g = random_grid(7, 5, 8, seed=3)
    h = parse_map(format_map(g))
    assert h.passable == g.passable and h.adj == g.adj


def test_adjacency_constructor():
    g = Grid.from_adjacency(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert g.neighbors(0) == (1, 3)
    assert g.dist(0, 2) == 2


def test_distance_table_neighbors_differ_by_at_most_one():
    g = bundled_map("random-32-32-20")
    table = g.distance_table(17)
    assert table[17] == 0
    for u in range(g.node_count):
        for v in g.adj[u]:
            assert abs(table[u] - table[v]) <= 1


def test_distances_match_naive_bfs_on_loaded_map():
    g = bundled_map("random-32-32-20")
    rng = random.Random(0)
    for _ in range(30):
        u, v = rng.randrange(g.node_count), rng.randrange(g.node_count)
        ref = bfs(g, u).get(v, UNREACHABLE)
        assert g.dist(u, v) == ref


def test_shortest_path_is_shortest():
    g = random_grid(9, 9, 20, seed=1)
    for u, v in [(0, g.node_count - 1), (5, 40)]:
        p = g.shortest_path(u, v)
        assert p[0] == u and p[-1] == v and len(p) - 1 == g.dist(u, v)
        assert all(b in g.adj[a] for a, b in zip(p, p[1:]))


def test_cache_is_safe_under_threads():
    g = random_grid(16, 16, 40, seed=2)
    results = []

    def work():
        results.append(tuple(g.distance_table(10)))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1
    assert results[0] == tuple(bfs(g, 10).get(v, UNREACHABLE) for v in range(g.node_count))


masks = st.integers(2, 6).flatmap(lambda w: st.integers(2, 6).flatmap(
    lambda h: st.lists(st.lists(st.booleans(), min_size=w, max_size=w), min_size=h, max_size=h)))


@settings(max_examples=60, deadline=None)
@given(masks, st.data())
def test_metric_properties(mask, data):
    if not any(any(r) for r in mask):
        mask[0][0] = True
    g = Grid.from_mask(mask)
    n = g.node_count
    u, v, w = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    assert g.dist(u, v) == g.dist(v, u)
    assert g.dist(u, w) <= g.dist(u, v) + g.dist(v, w)
    assert g.dist(u, v) == bfs(g, u).get(v, UNREACHABLE)
    assert u not in neighbors(g, u)
