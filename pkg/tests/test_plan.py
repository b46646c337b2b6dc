import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapf_ir.graph import Grid, random_grid
from mapf_ir.instance import Instance, random_instance
from mapf_ir.plan import (
    ConflictReport, Solution, StructuralError, agent_cost, compress, find_conflicts,
    format_solution, is_valid, parse_solution, sum_of_costs, validate,
)
from mapf_ir.solvers_init.push_and_swap import push_and_swap

from gadgets import local_minimum, local_repair
from oracles import collide, cost


def test_agent_cost_examples():
    assert agent_cost((5,)) == 0
    # v2, v3, v6, v3, v3 with goal v3 and v1..v5 with goal v5 (0-based ids)
    assert agent_cost((1, 2, 5, 2, 2)) == 3
    assert agent_cost((0, 1, 2, 3, 4)) == 4


def test_sum_of_costs_examples():
    g = Grid.from_adjacency(3, [(0, 1), (1, 2)])
    assert sum_of_costs(Solution.from_paths([(0,), (2,)])) == 0
    for k in (6, 10, 20):
        inst, init = local_minimum(k)
        assert init.sum_of_costs() == k + 1
        assert is_valid(inst, init)
    assert g.node_count == 3


def test_local_minimum_optimum_cost():
    inst, _ = local_minimum(6)
    # a1 goes v4 -> v3 -> v2 -> v1 while a2 steps aside into the leaf v5 and back
    opt = Solution.from_paths([(3, 2, 1, 0), (2, 1, 4, 1)])
    assert not validate(inst, opt)
    assert opt.sum_of_costs() == 6


def test_validate_detects_vertex_and_swap():
    g = Grid.from_adjacency(4, [(0, 1), (1, 2), (2, 3)])
    inst = Instance(g, (0, 2), (2, 0))
    swap = Solution.from_paths([(0, 1, 2), (2, 1, 0)])
    reps = validate(inst, swap)
    assert reps and all(isinstance(r, ConflictReport) for r in reps)
    assert any(r.kind == "vertex" and r.timestep == 1 for r in reps)
    inst2 = Instance(g, (1, 2), (2, 1))
    reps = validate(inst2, Solution.from_paths([(1, 2), (2, 1)]))
    assert [r.kind for r in reps] == ["swap"] and reps[0].timestep == 0


def test_validate_structural_errors_are_distinct():
    g = Grid.from_adjacency(4, [(0, 1), (1, 2), (2, 3)])
    inst = Instance(g, (0,), (3,))
    reps = validate(inst, Solution.from_paths([(0, 2, 3)]))
    assert reps and all(isinstance(r, StructuralError) and r.kind == "move" for r in reps)
    assert validate(inst, Solution.from_paths([(1, 2, 3)]))[0].kind == "start"
    assert validate(inst, Solution.from_paths([(0, 1, 2)]))[0].kind == "goal"
    assert validate(inst, Solution.from_paths([(0, 1), (2, 3)]))[0].kind == "path_count"


def test_parked_agent_blocks_forever():
    g = Grid.from_adjacency(4, [(0, 1), (1, 2), (2, 3)])
    inst = Instance(g, (0, 2), (3, 1))
    # agent 1 stops on 1 at t=1, so agent 0 walking through later collides with it
    bad = Solution.from_paths([(0, 0, 1, 2, 3), (2, 1)])
    reps = validate(inst, bad)
    assert reps and reps[0].kind == "vertex" and reps[0].timestep == 2


def test_solution_text_roundtrip():
    g = random_grid(6, 6, 5, seed=0)
    inst = random_instance(g, 3, seed=1)
    sol = push_and_swap(inst)
    back = parse_solution(g, format_solution(g, sol))
    assert back == sol


def test_compress_fixed_point_and_independence():
    g = Grid.from_mask([[True] * 4 for _ in range(2)])
    inst = Instance(g, (0, 4), (3, 7))
    indep = Solution.from_paths([(0, 1, 2, 3), (4, 5, 6, 7)])
    assert compress(inst, indep) == indep
    seq = Solution.from_paths([(0, 1, 2, 3, 3, 3, 3), (4, 4, 4, 4, 5, 6, 7)])
    out = compress(inst, seq)
    assert out == indep and out.sum_of_costs() == 6


def test_compress_on_push_and_swap_outputs():
    checked = 0
    for seed in range(100):
        g = random_grid(6, 6, 6, seed % 10)
        inst = random_instance(g, 4 + seed % 5, seed)
        sol = push_and_swap(inst)
        if sol is None:
            continue
        checked += 1
        out = compress(inst, sol)
        assert is_valid(inst, out)
        assert out.sum_of_costs() <= sol.sum_of_costs()
    assert checked >= 90


paths_strategy = st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=6), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(paths_strategy, st.integers(0, 4))
def test_padding_invariance(paths, extra):
    sol = Solution.from_paths(paths)
    padded = sol.padded(sol.horizon + extra)
    assert padded.sum_of_costs() == sol.sum_of_costs()
    pairs = {r.agents for r in find_conflicts(sol.paths)}
    assert {r.agents for r in find_conflicts(padded.paths)} == pairs
    for i, p in enumerate(sol.paths):
        assert sol.cost(i) <= sol.horizon
        assert (sol.cost(i) == 0) == all(v == p[-1] for v in p)
        assert sol.cost(i) == cost(p)


@settings(max_examples=200, deadline=None)
@given(paths_strategy)
def test_conflicts_match_pairwise_oracle(paths):
    sol = Solution.from_paths(paths)
    found = {r.agents for r in find_conflicts(sol.paths)}
    oracle = {(i, j) for i in range(sol.n) for j in range(i + 1, sol.n)
              if collide(sol.paths[i], sol.paths[j])}
    assert found == oracle


def test_repair_example_paths_are_valid():
    inst, sol = local_repair()
    assert is_valid(inst, sol)
    assert sol.costs() == [3, 4]


@pytest.mark.parametrize("seed", range(5))
def test_compress_keeps_validity_on_random_sequential(seed):
    g = random_grid(8, 8, 10, seed)
    inst = random_instance(g, 6, seed)
    sol = push_and_swap(inst)
    assert sol is not None
    out = compress(inst, sol)
    assert is_valid(inst, out) and out.sum_of_costs() <= sol.sum_of_costs()
