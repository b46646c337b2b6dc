"""Cost ratio over time for one instance under each rule schedule.

    python3 scripts/convergence.py --agents 80 --seed 3 --budget-ms 30000
"""

import argparse

from mapf_ir.graph import bundled_map
from mapf_ir.instance import random_instance
from mapf_ir.refine import RULES, RefineConfig, iterative_refine

CHECKPOINTS_MS = (0, 100, 300, 1_000, 3_000, 10_000, 30_000, 90_000)


def ratio_at(trace, ms, lb):
    seen = [e for e in trace.entries if e.elapsed_ms <= ms]
    return (seen[-1] if seen else trace.entries[0]).sum_of_costs / lb


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--map", default="random-32-32-20")
    p.add_argument("--agents", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-ms", type=int, default=10_000)
    p.add_argument("--schedules", default="composition," + ",".join(RULES),
                   help="comma list; each entry is one schedule")
    p.add_argument("--random-set-size", type=int, default=30)
    args = p.parse_args()

    inst = random_instance(bundled_map(args.map), args.agents, args.seed)
    lb = inst.lower_bound()
    marks = [m for m in CHECKPOINTS_MS if m <= args.budget_ms]
    print(f"{'schedule':<14}" + "".join(f"{m:>9}" for m in marks) + f"{'iters':>8}")
    for sched in args.schedules.split(","):
        cfg = RefineConfig(rules=(sched,), budget_ms=args.budget_ms, seed=args.seed,
                           random_set_size=args.random_set_size)
        _, trace = iterative_refine(inst, cfg)
        row = "".join(f"{ratio_at(trace, m, lb):>9.4f}" for m in marks)
        print(f"{sched:<14}{row}{len(trace.iterations()):>8}")


if __name__ == "__main__":
    main()
