"""Command-line front end.

    mixdesign design solve|ramanujan|greedy ...
    mixdesign sweep --method greedy|ramanujan ...
    mixdesign simulate --design design.json ...
    mixdesign validate --design design.json ...

Exit codes: 0 success, 1 usage or input error, 2 method-reported failure.
Every command that writes ``--out PATH`` also writes ``PATH.manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bilevel import CSV_COLUMNS as SWEEP_COLUMNS, ConvergenceModel, default_grid, sweep
from .cost import CostModel, node_costs
from .ramanujan import RamanujanError, RegularGraphSpec, degree_budget, ramanujan_mixing, rho_bound
from .solver import SolverConfig, solve_min_rho
from .sparsifier import greedy_sparsify
from .spectral import MixingDesign, MixingDistribution, design_from_json, rho_deterministic, rho_randomized, validate_rho_bounds
from .sim import DivergenceError, make_quadratic_task, run_dpsgd
from .topology import TopologyError, complete_graph, parse_topology

log = logging.getLogger("mixdesign")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
DEFAULT_COMP_WH = 0.0003342
DEFAULT_COMM_WH = 0.0138

# spawn keys for the hierarchical split of --seed
_SEED_TASK = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes where supported")
    return p


def _base_topology_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--topology", type=Path, help="edge-list file")
    src.add_argument("--m", type=int, help="use the complete graph on M nodes")
    p.add_argument("--comp-wh", type=float, default=DEFAULT_COMP_WH, help="default computation cost per node")
    p.add_argument("--comm-wh", type=float, default=DEFAULT_COMM_WH, help="default communication cost per link endpoint")


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iterations", type=int, default=SolverConfig.max_iterations)
    p.add_argument("--tolerance", type=float, default=SolverConfig.tolerance)


def _mixing_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--design", type=Path, action="append", required=True, help="design JSON (repeat for a mixture)")
    p.add_argument("--probs", type=str, default=None, help="comma-separated mixture probabilities")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="mixdesign", description="Energy-aware mixing matrix design for decentralized learning")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    design = sub.add_parser("design", help="compute a mixing design")
    dsub = design.add_subparsers(dest="method", required=True, parser_class=_Parser)
    p = dsub.add_parser("solve", parents=[common], help="unconstrained rho minimization")
    _base_topology_args(p)
    _solver_args(p)
    p = dsub.add_parser("ramanujan", parents=[common], help="weight-1/d Ramanujan graph on a complete base")
    _base_topology_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--d", type=int, help="degree")
    g.add_argument("--budget", type=float, help="per-node budget in Wh (degree derived from it)")
    p.add_argument("--max-attempts", type=int, default=1000)
    p = dsub.add_parser("greedy", parents=[common], help="greedy sparsification under a per-node budget")
    _base_topology_args(p)
    _solver_args(p)
    p.add_argument("--budget", type=float, required=True, help="per-node budget in Wh")

    p = sub.add_parser("sweep", parents=[common], help="sweep the budget and minimize budget * K(rho)")
    _base_topology_args(p)
    _solver_args(p)
    p.add_argument("--method", choices=("greedy", "ramanujan"), required=True)
    p.add_argument("--grid", type=str, default=None, help="comma-separated ascending budgets in Wh")
    p.add_argument("--n-grid", type=int, default=20, help="size of the default log-spaced grid")
    p.add_argument("--epsilon", type=float, default=ConvergenceModel.epsilon)
    p.add_argument("--sigma", type=float, default=ConvergenceModel.sigma)
    p.add_argument("--zeta", type=float, default=ConvergenceModel.zeta)
    p.add_argument("--m1", type=float, default=ConvergenceModel.m1)
    p.add_argument("--m2", type=float, default=ConvergenceModel.m2)
    p.add_argument("--smoothness", type=float, default=ConvergenceModel.smoothness)
    p.add_argument("--initial-gap", type=float, default=ConvergenceModel.initial_gap)
    p.add_argument("--constant", type=float, default=ConvergenceModel.constant)

    p = sub.add_parser("simulate", parents=[common], help="run D-PSGD on a synthetic least-squares task")
    _mixing_args(p)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--batch", type=int, default=10, help="minibatch size (0 = full batch)")
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--n-per-node", type=int, default=50)
    p.add_argument("--heterogeneity", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--record-every", type=int, default=1)

    p = sub.add_parser("validate", parents=[common], help="check the rho identities on a design or mixture")
    _mixing_args(p)
    p.add_argument("--trials", type=int, default=1000)
    return parser


# -- helpers ------------------------------------------------------------------

def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_topology(args):
    if args.topology is not None:
        t = parse_topology(_read(args.topology), comm_cost=args.comm_wh, comp_cost=args.comp_wh)
        return t, [args.topology]
    if args.m is not None:
        return complete_graph(args.m, comm_cost=args.comm_wh, comp_cost=args.comp_wh), []
    raise UsageError("give --topology FILE or --m N")


def _load_mixing(args):
    designs = [design_from_json(_read(p)) for p in args.design]
    if args.probs is None:
        probs = np.full(len(designs), 1.0 / len(designs))
    else:
        probs = np.array([float(x) for x in args.probs.split(",")])
    return MixingDistribution(tuple(designs), probs), list(args.design)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iterations, tolerance=args.tolerance, rng_seed=args.seed)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, text: str, argv, inputs) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text, encoding="utf-8")

    def plain(v):
        if isinstance(v, Path):
            return str(v)
        if isinstance(v, (list, tuple)):
            return [plain(x) for x in v]
        return v

    config = {k: plain(v) for k, v in sorted(vars(args).items())}
    manifest = {
        "command": list(argv),
        "config": config,
        "seeds": {"master": args.seed},
        "version": __version__,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(args.out)],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(str(args.out) + ".manifest.json").write_text(_dump_json(manifest), encoding="utf-8")


def _design_payload(design: MixingDesign, cost: CostModel, **extra) -> dict:
    d = design.to_dict()
    d["rho"] = rho_deterministic(design)
    d["node_costs_wh"] = [float(c) for c in node_costs(design.topology, cost, design.alpha)]
    d.update(extra)
    return d


# -- commands -----------------------------------------------------------------

def cmd_design(args, argv) -> int:
    t, inputs = _load_topology(args)
    cost = CostModel.from_topology(t)
    if args.method == "solve":
        res = solve_min_rho(t, None, _solver_cfg(args))
        payload = _design_payload(res.design, cost, method="solve",
                                  solver={"iterations": res.iterations, "converged": res.converged})
        _emit(args, _dump_json(payload), argv, inputs)
        return EXIT_OK

    if args.method == "ramanujan":
        if t.n_links != t.m * (t.m - 1) // 2:
            raise UsageError("ramanujan design needs a complete base topology")
        d = args.d if args.d is not None else degree_budget(t, cost, args.budget)
        spec = RegularGraphSpec(t.m, d, args.seed, args.max_attempts)
        design = ramanujan_mixing(spec, base=t)
        payload = _design_payload(design, cost, method="ramanujan", degree=d, rho_bound=rho_bound(d))
        _emit(args, _dump_json(payload), argv, inputs)
        return EXIT_OK

    out = greedy_sparsify(t, cost, args.budget, _solver_cfg(args))
    payload = out.to_dict()
    payload["method"] = "greedy"
    if out.success:
        payload.update(_design_payload(out.design, cost))
        payload.pop("design", None)
    _emit(args, _dump_json(payload), argv, inputs)
    if not out.success:
        log.error("greedy sparsification failed: %s", out.failure)
        return EXIT_FAILED
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    t, inputs = _load_topology(args)
    cost = CostModel.from_topology(t)
    cm = ConvergenceModel(
        smoothness=args.smoothness, sigma=args.sigma, m1=args.m1, zeta=args.zeta, m2=args.m2,
        epsilon=args.epsilon, initial_gap=args.initial_gap, constant=args.constant, nodes=t.m,
    )
    grid = None
    if args.grid is not None:
        grid = [float(x) for x in args.grid.split(",") if x.strip()]
    elif args.n_grid != 20:
        grid = default_grid(t, cost, args.n_grid)
    res = sweep(t, cost, cm, grid, args.method, seed=args.seed, solver_cfg=_solver_cfg(args), jobs=args.jobs)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in res.rows:
        w.writerow(row.csv_row())
    _emit(args, buf.getvalue(), argv, inputs)
    if res.best is None:
        log.warning("%s", res.diagnostic)
    else:
        log.info("argmin budget %.6g Wh (rho=%.4f, K=%.4g)", res.best.budget, res.best.rho, res.best.K)
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    mixing, inputs = _load_mixing(args)
    rho = rho_randomized(mixing)
    if rho >= 1:
        log.warning("rho = %.6g >= 1: no convergence guarantee for this mixing distribution", rho)
    task = make_quadratic_task(
        mixing.m, args.dim, args.n_per_node, args.heterogeneity,
        seed=np.random.SeedSequence(args.seed, spawn_key=(_SEED_TASK,)), noise=args.noise,
    )
    try:
        trace = run_dpsgd(task, mixing, args.eta, args.iters, batch=args.batch or None, seed=args.seed)
    except DivergenceError as exc:
        log.error("%s", exc)
        return EXIT_FAILED
    _emit(args, trace.to_csv(args.record_every), argv, inputs)
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    mixing, inputs = _load_mixing(args)
    report = validate_rho_bounds(mixing, args.trials, args.seed)
    _emit(args, _dump_json(report.to_dict()), argv, inputs)
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {"design": cmd_design, "sweep": cmd_sweep, "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except (UsageError, TopologyError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"mixdesign: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RamanujanError as exc:
        print(f"mixdesign: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
