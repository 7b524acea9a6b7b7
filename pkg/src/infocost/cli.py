"""Command-line front end.

Every subcommand reads JSON inputs, writes one JSON document (to stdout or
``--out``) and embeds a run manifest recording the subcommand, input
digests, seed, tolerances and package version.  Output contains no
timestamps, so deterministic subcommands are byte-reproducible.

Exit codes: 0 success, 2 malformed input, 3 invariant violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import (
    AXIOM_TOL,
    check_additivity,
    check_axiom0,
    check_monotonicity,
    check_subadditivity,
)
from .blackwell import FEAS_TOL, compare
from .costs import CostFunctional, cost_from_spec
from .dynamic import PoissonStrategy, SearchConfig, poisson_value, simulate, static_solve
from .errors import InvariantError, NumericalError
from .io import (
    MalformedInput,
    dumps,
    kernel_to_json,
    load_json,
    problem_from_json,
    process_to_json,
    sha256_file,
    structure_from_json,
    structure_to_json,
    tree_from_json,
)
from .local import DEFAULT_SCALES, estimate_kernel
from .replication import IndirectConfig, indirect_upper, markovianize, verify_replicates

EXIT_MALFORMED = 2
EXIT_INVARIANT = 3
EXIT_NUMERICAL = 4

CHECKERS = {
    "monotonicity": check_monotonicity,
    "subadditivity": check_subadditivity,
    "axiom0": check_axiom0,
    "additivity": check_additivity,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_MALFORMED)


class _Run:
    """Collects input digests and tolerances for the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.tolerances: dict[str, float] = {}

    def read(self, role: str, path) -> object:
        obj = load_json(path)
        self.inputs[role] = sha256_file(path)
        return obj

    def manifest(self) -> dict:
        return {
            "subcommand": self.args.command,
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.args.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
            "version": __version__,
        }


# ---------------------------------------------------------------------------
# argument helpers


def _cost(run: _Run, text: str) -> CostFunctional:
    """A preset name, an inline JSON spec, or a path to a JSON spec."""
    text = text.strip()
    if text.startswith("{") or text.startswith('"'):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"--cost: {exc}") from exc
    elif Path(text).is_file():
        spec = run.read("cost", text)
    else:
        spec = text
    try:
        return cost_from_spec(spec)
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"--cost: missing or bad parameter {exc}") from exc


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise MalformedInput(f"{what}: expected numbers, got {text!r}") from exc


def _ints(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise MalformedInput(f"{what}: expected integers, got {text!r}") from exc


def _structure(run: _Run, role: str, path):
    return structure_from_json(run.read(role, path))


def _witness_json(objects: dict) -> dict:
    out = {}
    for k, v in objects.items():
        if k == "kernel":
            out[k] = kernel_to_json(v)
        elif k == "parts":
            out[k] = [{"weight": lam, "structure": structure_to_json(s)} for lam, s in v]
        else:
            out[k] = structure_to_json(v)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval_cost(run: _Run) -> dict:
    a = run.args
    C = _cost(run, a.cost)
    pi = _structure(run, "structure", a.structure)
    return {"cost": C.label, "value": C(pi)}


def cmd_compare(run: _Run) -> dict:
    a = run.args
    run.tolerances["feasibility"] = a.tol
    x = _structure(run, "first", a.first)
    y = _structure(run, "second", a.second)
    res = compare(x, y, a.tol)
    out = {"relation": res.relation.value}
    if a.witness:
        out["witness"] = None if res.witness is None else res.witness
    return out


def cmd_indirect(run: _Run) -> dict:
    a = run.args
    run.tolerances["replication"] = a.tol
    C = _cost(run, a.cost)
    pi = _structure(run, "structure", a.structure)
    cfg = IndirectConfig(M_list=_ints(a.M_list, "--M-list"), K_list=_ints(a.K_list, "--K-list"),
                         depth=a.depth, tol=a.tol, fie_trials=a.trials, seed=a.seed)
    potential = None
    if a.potential is not None:
        pc = _cost(run, a.potential)
        if pc.potential is None:
            raise InvariantError("--potential must name a uniformly posterior separable cost")
        potential = pc.potential
    est = indirect_upper(C, pi, cfg, potential)
    if a.dump_process:
        Path(a.dump_process).write_text(dumps(process_to_json(est.best_process)) + "\n")
    return {
        "cost": C.label,
        "direct": C(pi),
        "upper": est.upper,
        "lower": est.lower,
        "family": est.family,
        "candidates": [{"family": n, "cost": c, "replicates": ok} for n, c, ok in est.candidates],
        "notes": est.notes,
    }


def cmd_check_axioms(run: _Run) -> dict:
    a = run.args
    run.tolerances["axiom"] = a.tol
    C = _cost(run, a.cost)
    names = [s.strip() for s in a.axioms.split(",") if s.strip()]
    unknown = [n for n in names if n not in CHECKERS]
    if unknown:
        raise MalformedInput(f"unknown axiom(s): {', '.join(unknown)}")
    reports = {}
    for name in names:
        rep = CHECKERS[name](C, a.trials, a.seed, a.states, a.tol)
        reports[name] = {
            "trials": rep.trials,
            "violations": len(rep.violations),
            "max_violation": rep.max_violation,
            "passed": rep.passed,
            "witnesses": [
                {"trial": v.trial, "lhs": v.lhs, "rhs": v.rhs, "objects": _witness_json(v.objects)}
                for v in rep.violations[: a.max_witnesses]
            ],
        }
    return {"cost": C.label, "states": a.states, "reports": reports}


def cmd_fit_local(run: _Run) -> dict:
    a = run.args
    C = _cost(run, a.cost)
    mu = np.asarray(_floats(a.at, "--at"))
    scales = _floats(a.scales, "--scales")
    est = estimate_kernel(C, mu, scales)
    return {
        "cost": C.label,
        "at": est.at,
        "projected_matrix": est.projected_matrix,
        "error_bound": est.error_bound,
        "probe_scales": list(est.probe_scales),
    }


def cmd_dynamic_solve(run: _Run) -> dict:
    a = run.args
    C = _cost(run, a.cost)
    problem = problem_from_json(run.read("problem", a.problem))
    grid = None if a.lambda_grid is None else _floats(a.lambda_grid, "--lambda-grid")
    cfg = SearchConfig(grid=a.grid, seed=a.seed)
    sol = static_solve(problem, C, grid, cfg)
    cost = C(sol.pi)
    return {
        "cost": C.label,
        "value": sol.value,
        "lambda": sol.lam,
        "price": sol.price,
        "binding": sol.binding,
        "structure": structure_to_json(sol.pi),
        "structure_cost": cost,
        "expected_periods": None if not sol.lam else cost / sol.lam,
    }


def cmd_simulate_poisson(run: _Run) -> dict:
    a = run.args
    C = _cost(run, a.cost)
    problem = problem_from_json(run.read("problem", a.problem))
    target = _structure(run, "target", a.target)
    strat = PoissonStrategy(target, a.rate)
    res = simulate(strat, problem, C, a.paths, a.seed, keep_paths=bool(a.csv))
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "periods", "payoff"])
            for i, (n, p) in enumerate(zip(res.periods, res.payoffs)):
                w.writerow([i, int(n), format(float(p), ".17g")])
    return {
        "cost": C.label,
        "mean": res.mean,
        "std_error": res.std_error,
        "paths": res.paths,
        "hazard": strat.hazard(C),
        "analytic": poisson_value(strat, problem, C),
    }


def cmd_markovianize(run: _Run) -> dict:
    a = run.args
    run.tolerances["replication"] = a.tol
    C = _cost(run, a.cost)
    tree = tree_from_json(run.read("tree", a.tree))
    res = markovianize(tree, C)
    check = verify_replicates(res.process, res.terminal, a.tol)
    if a.dump_process:
        Path(a.dump_process).write_text(dumps(process_to_json(res.process)) + "\n")
    return {
        "cost": C.label,
        "original_cost": res.original_cost,
        "markov_cost": res.markov_cost,
        "terminal": structure_to_json(res.terminal),
        "replicates": bool(check),
    }


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="infocost", description="Direct and indirect information costs.")
    p.add_argument("--version", action="version", version=f"infocost {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help, tol=None):
        s = sub.add_parser(name, help=help)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", help="write JSON here instead of stdout")
        if tol is not None:
            s.add_argument("--tol", type=float, default=tol)
        s.set_defaults(func=func)
        return s

    s = add("eval-cost", cmd_eval_cost, "evaluate a cost on a structure")
    s.add_argument("--cost", required=True)
    s.add_argument("--structure", required=True)

    s = add("compare", cmd_compare, "Blackwell comparison of two structures", FEAS_TOL)
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--witness", action="store_true", help="include the coupling matrix")

    s = add("indirect", cmd_indirect, "upper bound on the indirect cost", 1e-9)
    s.add_argument("--cost", required=True)
    s.add_argument("--structure", required=True)
    s.add_argument("--M-list", default="20,40,80")
    s.add_argument("--K-list", default="1,2,4,8,16")
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--trials", type=int, default=200, help="FIE trials for the lower bound")
    s.add_argument("--potential", help="UPS cost whose potential may certify a lower bound")
    s.add_argument("--dump-process", help="write the winning process JSON here")

    s = add("check-axioms", cmd_check_axioms, "randomized axiom checks", AXIOM_TOL)
    s.add_argument("--cost", required=True)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--states", type=int, default=3)
    s.add_argument("--axioms", default=",".join(CHECKERS))
    s.add_argument("--max-witnesses", type=int, default=5)

    s = add("fit-local", cmd_fit_local, "estimate the local quadratic kernel")
    s.add_argument("--cost", required=True)
    s.add_argument("--at", required=True, help="interior belief, comma separated")
    s.add_argument("--scales", default=",".join(map(str, DEFAULT_SCALES)))

    s = add("dynamic-solve", cmd_dynamic_solve, "solve the static reduction of the dynamic problem")
    s.add_argument("--cost", required=True)
    s.add_argument("--problem", required=True)
    s.add_argument("--grid", type=int, default=10_001, help="belief grid for binary concavification")
    s.add_argument("--lambda-grid", help="comma separated flow rates to search")

    s = add("simulate-poisson", cmd_simulate_poisson, "Monte Carlo payoff of a Poisson strategy")
    s.add_argument("--cost", required=True)
    s.add_argument("--problem", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--csv", help="write per-path periods and payoffs here")

    s = add("markovianize", cmd_markovianize, "collapse a signal tree to a belief process", 1e-9)
    s.add_argument("--cost", required=True)
    s.add_argument("--tree", required=True)
    s.add_argument("--dump-process", help="write the collapsed process JSON here")
    return p


def _fail(code: int, kind: str, exc: Exception) -> int:
    print(dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    run = _Run(args)
    try:
        result = args.func(run)
    except MalformedInput as exc:
        return _fail(EXIT_MALFORMED, "malformed input", exc)
    except InvariantError as exc:
        return _fail(EXIT_INVARIANT, "invariant violation", exc)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, "numerical failure", exc)
    result["manifest"] = run.manifest()
    text = dumps(result) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
