"""Randomized checkers for the cost axioms and a counterexample search.

Each axiom is described by an :class:`Axiom`: a sampler of random instances,
a signed gap (positive means the axiom is violated), and a decoder from an
unconstrained parameter vector, which lets :func:`find_violation` run
derivative-free local search over instances.  Witnesses are stored as JSON
and can be re-evaluated with :func:`replay`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, softmax

from . import io
from .costs import INF, CostFunction, Divergence, kl
from .experiments import Experiment, partition_experiment, product, random_experiment, set_partitions
from .posteriors import (
    RandomPosterior,
    TwoStepStrategy,
    dilute,
    random_posterior,
    random_posterior_with_prior,
    random_strategy,
    strategy_first_round,
    strategy_mean,
)
from .reports import AxiomReport, conjunction

WITNESS_FLOOR = 1e-6


# --- extended-real helpers ------------------------------------------------


def _one_sided(lhs: float, rhs: float) -> float:
    """``lhs - rhs`` where an infinite right side is always satisfied."""
    if math.isinf(rhs):
        return -INF
    if math.isinf(lhs):
        return INF
    return lhs - rhs


def _two_sided(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return INF
    return abs(a - b)


# --- instance encodings ---------------------------------------------------


LOGIT_CAP = 12.0


def _soft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax of logits squashed into ``[-LOGIT_CAP, LOGIT_CAP]``; keeps decodes interior."""
    return softmax(LOGIT_CAP * np.tanh(np.asarray(v) / LOGIT_CAP), axis=axis)


def _posterior(wlog: np.ndarray, qlog: np.ndarray) -> RandomPosterior:
    return RandomPosterior(_soft(wlog), _soft(qlog, axis=1))


@dataclass(frozen=True)
class Grouped:
    """Strategy layout: ``groups`` branches of ``atoms`` atoms each."""

    groups: int
    atoms: int

    def size(self, d: int) -> int:
        return self.groups * (1 + self.atoms + self.atoms * d)

    def decode(self, v: np.ndarray, d: int) -> TwoStepStrategy:
        G, A = self.groups, self.atoms
        bw = _soft(v[:G])
        rest = v[G:].reshape(G, A * (1 + d))
        branches = tuple(_posterior(r[:A], r[A:].reshape(A, d)) for r in rest)
        return TwoStepStrategy(bw, branches)


def _strategy_json(S):
    return io.strategy_to_json(S)


def _strategy_from(doc):
    return io.strategy_from_json(doc)


@dataclass(frozen=True)
class Axiom:
    name: str
    target: str  # "cost" or "divergence"
    sample: Callable[[np.random.Generator, int], Any]
    gap: Callable[[Any, Any], float]
    layouts: Callable[[np.random.Generator, int], tuple]
    to_json: Callable[[Any], dict]
    from_json: Callable[[dict], Any]


# monotone: hi = strategy_mean is a spread of lo = strategy_first_round


def _sample_split(rng, d):
    lo = random_posterior(rng, d)
    branches = []
    for q in lo.beliefs:
        k = int(rng.integers(1, 4))
        branches.append(RandomPosterior.point(q) if k == 1 else random_posterior_with_prior(rng, q, k))
    return TwoStepStrategy(lo.weights, tuple(branches))


def _gap_monotone(C, S):
    return _one_sided(C(strategy_first_round(S)), C(strategy_mean(S)))


def _gap_subadditive(C, S):
    rhs = C(strategy_first_round(S))
    for w, b in zip(S.weights, S.branches):
        rhs = rhs + w * C(b)
    return _one_sided(C(strategy_mean(S)), rhs)


def _gap_additive(C, S):
    rhs = C(strategy_first_round(S))
    for w, b in zip(S.weights, S.branches):
        rhs = rhs + w * C(b)
    return _two_sided(C(strategy_mean(S)), rhs)


def _grouped_layouts(rng, d):
    return (Grouped(int(rng.integers(1, 4)), int(rng.integers(2, 4))),)


# dilution linearity


def _sample_dilution(rng, d):
    return (random_posterior(rng, d), float(rng.uniform()))


def _gap_dilution(C, inst):
    pi, a = inst
    lhs = C(dilute(pi, a))
    rhs = 0.0 if a == 0 else a * C(pi)
    return _two_sided(lhs, rhs)


@dataclass(frozen=True)
class Flat:
    """Layout for instances assembled from softmax blocks."""

    kind: str
    shape: tuple

    def size(self, d: int) -> int:
        return int(sum(np.prod(s) for s in self._blocks(d)))

    def _blocks(self, d):
        if self.kind == "dilution":
            m = self.shape[0]
            return [(m,), (m, d), (1,)]
        if self.kind == "cmc":
            m1, m2 = self.shape
            return [(d, m1), (d, m2), (d,)]
        if self.kind == "pi":
            return [(d, self.shape[0]), (d,), (d,)]
        if self.kind == "triangle":
            m = self.shape[0]
            return [(m,), (m, d), (d,)]
        if self.kind == "quasimetric":
            return [(d,), (d,), (d,)]
        raise ValueError(self.kind)

    def decode(self, v: np.ndarray, d: int):
        parts, i = [], 0
        for s in self._blocks(d):
            n = int(np.prod(s))
            parts.append(v[i:i + n].reshape(s))
            i += n
        k = self.kind
        if k == "dilution":
            return (_posterior(parts[0], parts[1]), float(expit(parts[2][0])))
        if k == "cmc":
            return (Experiment(_soft(parts[0], axis=1)), Experiment(_soft(parts[1], axis=1)),
                    _soft(parts[2]))
        if k == "pi":
            return (Experiment(_soft(parts[0], axis=1)), _soft(parts[1]), _soft(parts[2]))
        if k == "triangle":
            return (_posterior(parts[0], parts[1]), _soft(parts[2]))
        return tuple(_soft(p) for p in parts)


def _sample_cmc(rng, d):
    return (random_experiment(rng, d), random_experiment(rng, d), rng.dirichlet(np.ones(d)))


def _gap_cmc(C, inst):
    s1, s2, p = inst
    return _two_sided(C.on_experiment(product(s1, s2), p), C.on_experiment(s1, p) + C.on_experiment(s2, p))


def _sample_pi(rng, d):
    return (random_experiment(rng, d), rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d)))


def _gap_pi(C, inst):
    s, p, p2 = inst
    return _two_sided(C.on_experiment(s, p), C.on_experiment(s, p2))


def _sample_triangle(rng, d):
    return (random_posterior(rng, d), rng.dirichlet(np.ones(d)))


def _gap_triangle(D: Divergence, inst):
    pi, p = inst
    pp = pi.prior
    lhs = float(pi.weights @ np.array([D(q, p) for q in pi.beliefs]))
    inner = np.array([D(q, pp) for q in pi.beliefs])
    rhs = D(pp, p) + float(pi.weights @ inner) if not np.any(np.isinf(inner)) else INF
    return _one_sided(lhs, rhs)


def _sample_quasi(rng, d):
    return tuple(rng.dirichlet(np.ones(d)) for _ in range(3))


def _gap_quasi(D: Divergence, inst):
    q, r, p = inst
    return _one_sided(D(q, p), D(r, p) + D(q, r))


def _flat_layouts(kind):
    def layouts(rng, d):
        if kind == "cmc":
            return (Flat(kind, (int(rng.integers(2, 4)), int(rng.integers(2, 4)))),)
        if kind == "quasimetric":
            return (Flat(kind, ()),)
        return (Flat(kind, (int(rng.integers(2, 4)),)),)
    return layouts


def _exp_json(inst):
    out = {}
    for k, v in inst.items():
        if isinstance(v, Experiment):
            out[k] = io.experiment_to_json(v)
        elif isinstance(v, RandomPosterior):
            out[k] = io.posterior_to_json(v)
        else:
            out[k] = np.asarray(v).tolist()
    return out


AXIOMS: dict[str, Axiom] = {
    "monotone": Axiom("monotone", "cost", _sample_split, _gap_monotone, _grouped_layouts,
                      _strategy_json, _strategy_from),
    "subadditive": Axiom("subadditive", "cost", random_strategy, _gap_subadditive, _grouped_layouts,
                         _strategy_json, _strategy_from),
    "additive": Axiom("additive", "cost", random_strategy, _gap_additive, _grouped_layouts,
                      _strategy_json, _strategy_from),
    "dilution_linear": Axiom(
        "dilution_linear", "cost", _sample_dilution, _gap_dilution, _flat_layouts("dilution"),
        lambda i: {"pi": io.posterior_to_json(i[0]), "alpha": i[1]},
        lambda d: (io.posterior_from_json(d["pi"]), float(d["alpha"]))),
    "cmc": Axiom(
        "cmc", "cost", _sample_cmc, _gap_cmc, _flat_layouts("cmc"),
        lambda i: _exp_json({"sigma": i[0], "sigma2": i[1], "prior": i[2]}),
        lambda d: (io.experiment_from_json(d["sigma"]), io.experiment_from_json(d["sigma2"]),
                   np.array(d["prior"]))),
    "prior_invariant": Axiom(
        "prior_invariant", "cost", _sample_pi, _gap_pi, _flat_layouts("pi"),
        lambda i: _exp_json({"sigma": i[0], "prior": i[1], "prior2": i[2]}),
        lambda d: (io.experiment_from_json(d["sigma"]), np.array(d["prior"]), np.array(d["prior2"]))),
    "triangle_avg": Axiom(
        "triangle_avg", "divergence", _sample_triangle, _gap_triangle, _flat_layouts("triangle"),
        lambda i: {"pi": io.posterior_to_json(i[0]), "prior": i[1].tolist()},
        lambda d: (io.posterior_from_json(d["pi"]), np.array(d["prior"]))),
    "quasimetric": Axiom(
        "quasimetric", "divergence", _sample_quasi, _gap_quasi, _flat_layouts("quasimetric"),
        lambda i: {"q": i[0].tolist(), "r": i[1].tolist(), "p": i[2].tolist()},
        lambda d: (np.array(d["q"]), np.array(d["r"]), np.array(d["p"]))),
}

ALIASES = {"pi": "prior_invariant", "dilution": "dilution_linear", "triangle": "triangle_avg"}


def get_axiom(name: str) -> Axiom:
    name = ALIASES.get(name, name)
    if name not in AXIOMS:
        raise KeyError(f"unknown axiom {name!r}")
    return AXIOMS[name]


def _target(obj, axiom: Axiom):
    if axiom.target == "divergence" and isinstance(obj, CostFunction):
        if obj.divergence is None:
            raise ValueError(f"{obj.name} has no divergence")
        return obj.divergence
    return obj


def _default_dim(obj) -> int:
    return getattr(obj, "n_states", None) or 2


def _tolerance(obj, tol):
    if tol is not None:
        return tol
    return obj.tolerance if isinstance(obj, CostFunction) else 1e-9


def _name(obj) -> str:
    return getattr(obj, "name", "D")


# --- checks -----------------------------------------------------------------


def run_check(
    obj,
    axiom: str,
    trials: int = 1000,
    seed: int = 0,
    d: int | None = None,
    tol: float | None = None,
    sampler: Callable | None = None,
    search_budget: int = 0,
) -> AxiomReport:
    """Sample ``trials`` instances and record the worst signed gap.

    With ``search_budget > 0`` a passing sample is followed by
    :func:`find_violation`; a witness found there turns the verdict to fail.
    """
    ax = get_axiom(axiom)
    target = _target(obj, ax)
    d = d or _default_dim(obj)
    tol = _tolerance(obj, tol)
    sample = sampler or ax.sample
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    worst, witness = -INF, None
    for _ in range(trials):
        inst = sample(rng, d)
        g = ax.gap(target, inst)
        if g > worst:
            worst, witness = g, inst
    report = AxiomReport(
        ax.name, _name(obj), trials, worst, tol,
        None if witness is None else {"axiom": ax.name, "instance": ax.to_json(witness)},
        seed, trials,
    )
    if search_budget > 0 and report.passed:
        found = find_violation(obj, ax.name, search_budget, seed=seed, d=d)
        report.evaluations += found["evaluations"]
        report.details["search"] = {"budget": search_budget, "best_gap": found["gap"]}
        if found["witness"] is not None and found["gap"] > tol:
            report.worst_violation = found["gap"]
            report.witness = found["witness"]
            report.verdict = "fail"
    return report


def replay(obj, witness: dict) -> float:
    """Re-evaluate the signed gap of a recorded witness."""
    ax = get_axiom(witness["axiom"])
    return ax.gap(_target(obj, ax), ax.from_json(witness["instance"]))


def check_monotone(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "monotone", trials, seed, **kw)


def check_subadditive(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "subadditive", trials, seed, **kw)


def check_additive(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "additive", trials, seed, **kw)


def check_dilution_linear(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "dilution_linear", trials, seed, **kw)


def check_cmc(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "cmc", trials, seed, **kw)


def check_prior_invariant(C, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(C, "prior_invariant", trials, seed, **kw)


def check_triangle_avg(D, trials=1000, seed=0, **kw) -> AxiomReport:
    return run_check(D, "triangle_avg", trials, seed, **kw)


def check_quasimetric(D, trials=1000, seed=0, **kw) -> AxiomReport:
    report = run_check(D, "quasimetric", trials, seed, **kw)
    target = D.divergence if isinstance(D, CostFunction) else D
    rng = np.random.default_rng(seed)
    worst_self = 0.0
    for _ in range(min(trials, 200)):
        p = rng.dirichlet(np.ones(kw.get("d") or _default_dim(D)))
        worst_self = max(worst_self, abs(target(p, p)))
    report.details["identity_gap"] = worst_self
    if worst_self > report.tolerance:
        report.verdict = "fail"
    return report


def slp_verdict(C, trials=1000, seed=0, **kw) -> AxiomReport:
    """Sequential learning-proofness: Monotone and Subadditive together."""
    return conjunction("slp", [check_monotone(C, trials, seed, **kw), check_subadditive(C, trials, seed, **kw)])


def check_partition_flatness(C: CostFunction, p, tol: float | None = None) -> AxiomReport:
    """Spread of partition-experiment costs across all nontrivial partitions."""
    p = np.asarray(p, dtype=float)
    tol = C.tolerance if tol is None else tol
    vals = []
    for P in set_partitions(p.size):
        if len(P.cells) == 1:
            continue
        vals.append((C.on_experiment(partition_experiment(P), p), P))
    lo = min(vals, key=lambda t: t[0])
    hi = max(vals, key=lambda t: t[0])
    gap = _two_sided(hi[0], lo[0])
    witness = {"prior": p.tolist(), "cheapest": [list(c) for c in lo[1].cells],
               "dearest": [list(c) for c in hi[1].cells], "values": [lo[0], hi[0]]}
    return AxiomReport("partition_flatness", C.name, len(vals), gap, tol, witness)


# --- counterexample search ------------------------------------------------


def find_violation(
    obj,
    axiom: str,
    budget: int = 100_000,
    seed: int = 0,
    d: int | None = None,
    n_starts: int = 8,
    threshold: float = WITNESS_FLOOR,
    stop_at: float | None = None,
) -> dict:
    """Multi-start random search followed by Nelder-Mead refinement.

    Returns ``{"witness", "gap", "evaluations"}``; the witness is ``None``
    when no gap above ``threshold`` turned up within ``budget`` evaluations.
    With ``stop_at`` set, the search ends as soon as a gap that large is seen.
    """
    ax = get_axiom(axiom)
    target = _target(obj, ax)
    d = d or _default_dim(obj)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    evals = 0
    best = [-INF, None, None]

    class _Done(Exception):
        pass

    def score(layout, v):
        nonlocal evals
        evals += 1
        try:
            g = ax.gap(target, layout.decode(v, d))
        except (ValueError, FloatingPointError):
            return -INF
        if g > best[0]:
            best[:] = [g, layout, np.array(v, dtype=float)]
            if stop_at is not None and g >= stop_at:
                raise _Done
        return g

    try:
        pool = []
        while evals < budget // 4:
            layout = ax.layouts(rng, d)[0]
            v = rng.normal(scale=2.0, size=layout.size(d))
            pool.append((score(layout, v), layout, v))
        pool.sort(key=lambda t: -t[0])
        starts = pool[:n_starts]
        per_start = max(50, (budget - evals) // max(1, len(starts)))
        for g0, layout, v0 in starts:
            if evals >= budget or (math.isinf(g0) and g0 > 0):
                break

            def f(v, layout=layout):
                g = score(layout, v)
                if math.isinf(g):
                    return -1e300 if g > 0 else 1e300
                return -g

            minimize(f, v0, method="Nelder-Mead",
                     options={"maxfev": min(per_start, budget - evals), "xatol": 1e-10, "fatol": 1e-14})
    except _Done:
        pass
    best_g, best_layout, best_v = best

    witness = None
    if best_layout is not None and best_g > threshold:
        inst = best_layout.decode(best_v, d)
        witness = {"axiom": ax.name, "instance": ax.to_json(inst)}
        best_g = ax.gap(target, ax.from_json(witness["instance"]))
    return {"witness": witness, "gap": float(best_g), "evaluations": evals}


# --- trilemma --------------------------------------------------------------

TRILEMMA_EXPECTED = {
    "ti": {"slp": "pass", "cmc": "pass", "prior_invariant": "fail"},
    "llr": {"slp": "fail", "cmc": "pass", "prior_invariant": "pass"},
    "mlr": {"slp": "pass", "cmc": "fail", "prior_invariant": "pass"},
}


def trilemma(seed: int = 0, trials: int = 2000, budget: int = 20_000, d: int = 2) -> dict:
    """3x3 matrix of {SLP, PI, CMC} verdicts for TI, LLR and MLR.

    TI and LLR use random positive coefficients drawn from ``seed``.
    """
    from .costs import llr_cost, mlr_cost, ti_cost

    rng = np.random.default_rng(seed)
    gamma = rng.uniform(0.5, 1.5, size=(d, d))
    beta = rng.uniform(0.5, 1.5, size=(d, d))
    costs = {"ti": ti_cost(gamma), "llr": llr_cost(beta), "mlr": mlr_cost()}
    matrix, reports = {}, {}
    for name, C in costs.items():
        row = {}
        for prop in ("slp", "prior_invariant", "cmc"):
            if prop == "slp":
                parts = [run_check(C, a, trials, seed, d=d, search_budget=budget)
                         for a in ("monotone", "subadditive")]
                rep = conjunction("slp", parts)
            else:
                rep = run_check(C, prop, trials, seed, d=d, search_budget=budget)
            row[prop] = rep.verdict
            reports[f"{name}.{prop}"] = rep
        matrix[name] = row
    return {
        "matrix": matrix,
        "matches": matrix == TRILEMMA_EXPECTED,
        "reports": {k: r.to_dict() for k, r in reports.items()},
        "coefficients": {"gamma": gamma.tolist(), "beta": beta.tolist()},
        "seed": seed,
    }


def kl_divergence() -> Divergence:
    return Divergence(lambda q, p: kl(q, p), "KL")

