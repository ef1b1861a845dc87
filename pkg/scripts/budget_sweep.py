"""Sweep the per-node budget on a random geometric topology and print Delta * K(rho).

    python3 scripts/budget_sweep.py --method greedy --seed 0 --n-grid 8
"""
import argparse
import math

from mixdesign.bilevel import ConvergenceModel, default_grid, sweep
from mixdesign.cost import CostModel
from mixdesign.topology import complete_graph, random_geometric

COMP_WH = 0.0003342
COMM_WH = 0.0138


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--method", choices=("greedy", "ramanujan"), default="greedy")
    ap.add_argument("--m", type=int, default=33)
    ap.add_argument("--radius", type=float, default=0.38)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-grid", type=int, default=8)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    # Ramanujan designs live on the complete graph
    if args.method == "ramanujan":
        t = complete_graph(args.m, comm_cost=COMM_WH, comp_cost=COMP_WH)
    else:
        t = random_geometric(args.m, args.radius, seed=args.seed, comm_cost=COMM_WH, comp_cost=COMP_WH)
    cost = CostModel.from_topology(t)
    grid = default_grid(t, cost, args.n_grid)
    res = sweep(t, cost, ConvergenceModel(), grid, args.method, seed=args.seed, jobs=args.jobs)

    print(f"{'budget_wh':>10} {'rho':>8} {'K':>10} {'budget*K':>10} {'links':>6}  note")
    for i, r in enumerate(res.rows):
        mark = "*" if i == res.argmin else " "
        rho = "-" if math.isnan(r.rho) else f"{r.rho:.4f}"
        print(f"{r.budget:10.5f} {rho:>8} {r.K:10.4g} {r.product:10.4g} {r.links_active:6d} {mark}{r.note}")
    if res.best is None:
        print(res.diagnostic)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
