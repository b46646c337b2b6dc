"""Initial solvers compared before and after refinement on shared instances.

    python3 scripts/table_sweep.py --map random-32-32-20 --agents 80 --instances 5 \
        --budget-ms 30000 --out results/table
"""

import argparse
import os

from mapf_ir.cli import run_sweep
from mapf_ir.refine import INIT_SOLVERS, RefineConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--map", default="random-32-32-20")
    p.add_argument("--agents", type=int, default=80)
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-ms", type=int, default=30_000)
    p.add_argument("--init", default="pibt_complete,ps,hca,whca,ecbs",
                   help=f"comma list out of {','.join(INIT_SOLVERS)}")
    p.add_argument("--rules", default="composition")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel runs; keep at 1 when timings matter")
    p.add_argument("--out", default=None, help="directory for traces and report.csv")
    args = p.parse_args()

    pipelines = [(name, RefineConfig(init_solver=name, rules=args.rules,
                                     budget_ms=args.budget_ms, seed=args.seed))
                 for name in args.init.split(",")]
    report = run_sweep(pipelines, args.map, args.agents, args.instances, args.seed,
                       args.out, args.workers)
    print(report.format_table())
    if args.out:
        report.write_csv(os.path.join(args.out, "report.csv"))


if __name__ == "__main__":
    main()
