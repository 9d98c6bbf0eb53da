"""``infocost`` command line: one binary, one subcommand per experiment.

Exit codes: 0 pass, 1 fail, 2 schema or input error, 3 inconclusive.
Reports are deterministic JSON (sorted keys) unless ``--format`` says otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import io
from .axioms import AXIOMS, ALIASES, run_check, slp_verdict, trilemma
from .costs import named_f
from .experiments import bayes_map
from .kernels import KinkedCost, NotLocallyQuadratic, estimate_kernel
from .seqlearn import (
    bernoulli_walk_cost,
    bernoulli_walk_limit,
    compute_indirect,
    phi_iterate,
    poisson_cover,
    simulate_walk,
    table_from_cost,
)
from .simplex import BeliefGrid, InvalidInput

EXIT_PASS, EXIT_FAIL, EXIT_SCHEMA, EXIT_INCONCLUSIVE = 0, 1, 2, 3
VERDICT_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


@dataclass
class RunConfig:
    command: str
    seed: int
    trials: int | None = None
    grid_n: int | None = None
    tol: float | None = None
    out: str | None = None
    inputs: dict = field(default_factory=dict)


def _seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("INFOCOST_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise io.SchemaError(f"INFOCOST_SEED must be an integer, got {env!r}") from exc


def _config(args) -> RunConfig:
    inputs = {k: getattr(args, k) for k in ("cost", "experiment", "prior", "posterior", "axiom")
              if getattr(args, k, None) is not None}
    return RunConfig(args.cmd_path, _seed(getattr(args, "seed", None)), getattr(args, "trials", None),
                     getattr(args, "grid_n", None), getattr(args, "tol", None),
                     getattr(args, "out", None), inputs)


def _prior(args, d: int) -> np.ndarray:
    if args.prior is None:
        return np.full(d, 1.0 / d)
    p = io.parse_prior(args.prior)
    if p.size != d:
        raise io.SchemaError(f"prior has {p.size} entries, experiment has {d} states")
    return p


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    else:
        yield prefix, obj


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return io.dumps(report)
    rows = [(k, io._jsonable(v)) for k, v in _flatten(report)]
    if fmt == "csv":
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue().rstrip("\n")
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


# --- commands ----------------------------------------------------------------


def cmd_experiment_validate(args, cfg):
    sigma = io.experiment_from_json(args.experiment)
    p = _prior(args, sigma.n_states)
    pi = bayes_map(sigma, p)
    return {"experiment": io.experiment_to_json(sigma), "prior": p,
            "posterior": io.posterior_to_json(pi), "valid": True}, EXIT_PASS


def cmd_cost_eval(args, cfg):
    C = io.cost_from_spec(args.cost)
    report = {"cost": C.name}
    if args.posterior is not None:
        pi = io.posterior_from_json(args.posterior)
        report.update(posterior=io.posterior_to_json(pi), value=C(pi))
        return report, EXIT_PASS
    if args.experiment is None:
        raise io.SchemaError("cost eval needs --experiment or --posterior")
    sigma = io.experiment_from_json(args.experiment)
    p = _prior(args, sigma.n_states)
    value = C.on_experiment(sigma, p)
    via = C.on_experiment_via_posterior(sigma, p)
    both_inf = math.isinf(value) and math.isinf(via)
    agree = both_inf or abs(value - via) <= max(C.tolerance, 1e-9 * abs(value))
    report.update(prior=p, value=value, value_via_posterior=via, forms_agree=agree)
    return report, EXIT_PASS if agree else EXIT_FAIL


def cmd_axioms_check(args, cfg):
    C = io.cost_from_spec(args.cost)
    trials = args.trials or 1000
    name = ALIASES.get(args.axiom, args.axiom)
    kw = {"tol": args.tol, "search_budget": args.budget}
    if args.dim is not None:
        kw["d"] = args.dim
    if name == "slp":
        rep = slp_verdict(C, trials, cfg.seed, **kw)
    elif name in AXIOMS:
        rep = run_check(C, name, trials, cfg.seed, **kw)
    else:
        raise io.SchemaError(f"unknown axiom {args.axiom!r}; choose from slp, {', '.join(sorted(AXIOMS))}")
    return rep.to_dict(), VERDICT_EXIT[rep.verdict]


def cmd_trilemma(args, cfg):
    res = trilemma(cfg.seed, args.trials or 2000, args.budget, args.dim or 2)
    return res, EXIT_PASS if res["matches"] else EXIT_FAIL


def _ladder(text: str):
    try:
        ladder = tuple(float(v) for v in text.split(":"))
    except ValueError as exc:
        raise io.SchemaError(f"ladder must be colon-separated numbers: {text!r}") from exc
    if len(ladder) < 2 or any(not (0 < h < 1) for h in ladder):
        raise io.SchemaError("ladder needs at least two scales in (0, 1)")
    return ladder


def cmd_kernel_estimate(args, cfg):
    C = io.cost_from_spec(args.cost)
    d = C.n_states or (len(args.prior.split(",")) if args.prior else 2)
    p = _prior(args, d)
    report = {"cost": C.name, "prior": p, "ladder": _ladder(args.ladder)}
    try:
        est = estimate_kernel(C, p, report["ladder"])
    except KinkedCost as exc:
        report.update(verdict="not-locally-quadratic", kinked=True, slope=exc.slope, reason=str(exc))
        return report, EXIT_INCONCLUSIVE
    except NotLocallyQuadratic as exc:
        report.update(verdict="not-locally-quadratic", kinked=False, reason=str(exc))
        return report, EXIT_INCONCLUSIVE
    report.update(verdict="locally-quadratic", kernel=est.kernel, residual=est.residual)
    return report, EXIT_PASS


def cmd_phi_iterate(args, cfg):
    C = io.cost_from_spec(args.cost)
    n = args.grid_n or 41
    grid = BeliefGrid.logodds(n) if args.grid == "logodds" else BeliefGrid.uniform(n)
    table = table_from_cost(C, grid, disposal=args.disposal)
    rep = phi_iterate(table, tol=args.tol if args.tol is not None else 1e-8,
                      max_iters=args.max_iters, backend=args.backend)
    if args.out:
        io.write_table_csv(rep.final.rows(), args.out)
    finite = np.isfinite(rep.final.values)
    report = {"cost": C.name, "grid": {"n": n, "kind": grid.kind}, "iterations": rep.iterations,
              "converged": rep.converged, "sup_change": rep.sup_change,
              "finite_entries": int(np.count_nonzero(finite)), "table": args.out}
    return report, EXIT_PASS if rep.converged else EXIT_INCONCLUSIVE


def cmd_walk(args, cfg):
    f = named_f(args.f)
    ns = list(range(args.n + 1))
    values = [bernoulli_walk_cost(f, args.ell, k) for k in ns]
    limit = bernoulli_walk_limit(f.fpp0, args.ell)
    report = {"f": f.name, "ell": args.ell, "n": ns, "values": values, "limit": limit,
              "decreasing": bool(all(b < a for a, b in zip(values, values[1:]))),
              "seed": cfg.seed}
    if args.mc_paths:
        mean, se = simulate_walk(f, args.ell, args.n, args.mc_paths, cfg.seed)
        report["monte_carlo"] = {"paths": args.mc_paths, "mean": mean, "se": se,
                                 "z": (mean - values[-1]) / se if se > 0 else 0.0}
    return report, EXIT_PASS


def cmd_poisson_cover(args, cfg):
    from .costs import tv_cost
    from .experiments import blackwell_geq

    sigma = io.experiment_from_json(args.experiment)
    if sigma.n_states != 2:
        raise io.SchemaError("poisson-cover needs a two-state experiment")
    hat, lam = poisson_cover(sigma)
    tv = tv_cost().on_experiment(sigma, np.array([0.5, 0.5]))
    reveal = 1.0 if math.isinf(lam) else -math.expm1(-lam)
    dominates = blackwell_geq(hat, sigma)
    ok = dominates and abs(tv - reveal) <= 1e-12
    report = {"lambda_hat": lam, "tv": tv, "one_minus_exp": reveal, "dominates": dominates,
              "sigma_hat": io.experiment_to_json(hat)}
    return report, EXIT_PASS if ok else EXIT_FAIL


def cmd_pipeline(args, cfg):
    C = io.cost_from_spec(args.cost)
    res = compute_indirect(C, grid_n=args.grid_n or 41, tol=args.tol if args.tol is not None else 1e-8,
                           seed=cfg.seed)
    res["seed"] = cfg.seed
    return res, EXIT_PASS


# --- parser ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $INFOCOST_SEED or 0)")
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    p.add_argument("--out", default=None, help="write the report (or table, for phi) to this path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infocost", description="Costs of information: checks and experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("experiment", help="experiment utilities").add_subparsers(dest="action", required=True)
    p = exp.add_parser("validate", help="validate an experiment and print its random posterior")
    p.add_argument("--experiment", required=True)
    p.add_argument("--prior")
    _common(p)
    p.set_defaults(func=cmd_experiment_validate, cmd_path="experiment validate")

    cost = sub.add_parser("cost", help="evaluate costs").add_subparsers(dest="action", required=True)
    p = cost.add_parser("eval", help="evaluate a cost on an experiment or random posterior")
    p.add_argument("--cost", required=True, help="kind name, inline JSON or JSON file")
    p.add_argument("--experiment")
    p.add_argument("--posterior")
    p.add_argument("--prior")
    _common(p)
    p.set_defaults(func=cmd_cost_eval, cmd_path="cost eval")

    ax = sub.add_parser("axioms", help="axiom checks with witnesses").add_subparsers(dest="action", required=True)
    p = ax.add_parser("check", help="randomized axiom check")
    p.add_argument("--cost", required=True)
    p.add_argument("--axiom", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--budget", type=int, default=0, help="counterexample search evaluations")
    p.add_argument("--dim", type=int, help="number of states")
    _common(p)
    p.set_defaults(func=cmd_axioms_check, cmd_path="axioms check")

    p = sub.add_parser("trilemma", help="SLP / PI / CMC matrix for TI, LLR and MLR")
    p.add_argument("--trials", type=int)
    p.add_argument("--budget", type=int, default=20_000)
    p.add_argument("--dim", type=int)
    _common(p)
    p.set_defaults(func=cmd_trilemma, cmd_path="trilemma")

    ker = sub.add_parser("kernel", help="local kernel estimation").add_subparsers(dest="action", required=True)
    p = ker.add_parser("estimate", help="estimate the local kernel of a cost")
    p.add_argument("--cost", required=True)
    p.add_argument("--prior")
    p.add_argument("--ladder", default="1e-2:1e-3:1e-4")
    _common(p)
    p.set_defaults(func=cmd_kernel_estimate, cmd_path="kernel estimate")

    phi = sub.add_parser("phi", help="sequential-learning fixed points on a grid").add_subparsers(dest="action", required=True)
    p = phi.add_parser("iterate", help="iterate the two-step map on a belief grid")
    p.add_argument("--cost", required=True)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--grid", choices=("uniform", "logodds"), default="uniform")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--disposal", action="store_true", help="seed the table with diluted wider posteriors")
    p.add_argument("--backend", choices=("numba", "numpy"))
    _common(p)
    p.set_defaults(func=cmd_phi_iterate, cmd_path="phi iterate")

    p = sub.add_parser("walk", help="Bernoulli random-walk subdivision costs")
    p.add_argument("--f", default="l2")
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--mc-paths", type=int, default=0, help="Monte Carlo paths at the last n")
    _common(p)
    p.set_defaults(func=cmd_walk, cmd_path="walk")

    p = sub.add_parser("poisson-cover", help="Poisson dilution cover of a two-state experiment")
    p.add_argument("--experiment", required=True)
    _common(p)
    p.set_defaults(func=cmd_poisson_cover, cmd_path="poisson-cover")

    p = sub.add_parser("pipeline", help="decide whether the indirect cost is posterior separable")
    p.add_argument("--cost", required=True)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--tol", type=float)
    _common(p)
    p.set_defaults(func=cmd_pipeline, cmd_path="pipeline")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        report, code = args.func(args, cfg)
    except (InvalidInput, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    report = dict(report)
    report.setdefault("seed", cfg.seed)
    report["config"] = asdict(cfg)
    text = _render(report, args.format)
    if args.out and args.cmd_path != "phi iterate":
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
