"""JSON and CSV formats for experiments, random posteriors, cost specs and tables."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import costs as _c
from .experiments import Experiment
from .posteriors import RandomPosterior, TwoStepStrategy
from .simplex import InvalidInput


class SchemaError(InvalidInput):
    """Input document does not match the expected schema."""


def load_json(path_or_obj):
    if isinstance(path_or_obj, (dict, list)):
        return path_or_obj
    try:
        return json.loads(Path(path_or_obj).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read JSON from {path_or_obj}: {exc}") from exc


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, ``inf`` as a string."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- experiments and posteriors -------------------------------------------


def experiment_to_json(sigma: Experiment) -> dict:
    return {"states": list(sigma.states), "signals": list(sigma.signals),
            "channel": sigma.channel.tolist()}


def experiment_from_json(doc) -> Experiment:
    doc = load_json(doc)
    if not isinstance(doc, dict) or "channel" not in doc:
        raise SchemaError("experiment needs a 'channel' field")
    try:
        K = np.asarray(doc["channel"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"channel is not numeric: {exc}") from exc
    try:
        return Experiment(K, tuple(doc.get("signals", ())), tuple(doc.get("states", ())))
    except InvalidInput as exc:
        raise SchemaError(str(exc)) from exc


def posterior_to_json(pi: RandomPosterior) -> dict:
    return {"atoms": [{"w": float(w), "q": q.tolist()} for w, q in pi.atoms()]}


def posterior_from_json(doc) -> RandomPosterior:
    doc = load_json(doc)
    try:
        atoms = [(a["w"], a["q"]) for a in doc["atoms"]]
        return RandomPosterior.from_atoms(atoms)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed random posterior: {exc}") from exc


def strategy_to_json(strategy: TwoStepStrategy) -> dict:
    return {"branches": [{"w": float(w), "posterior": posterior_to_json(b)}
                         for w, b in zip(strategy.weights, strategy.branches)]}


def strategy_from_json(doc) -> TwoStepStrategy:
    doc = load_json(doc)
    try:
        w = [b["w"] for b in doc["branches"]]
        br = [posterior_from_json(b["posterior"]) for b in doc["branches"]]
        return TwoStepStrategy(np.array(w), tuple(br))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed strategy: {exc}") from exc


def parse_prior(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise SchemaError(f"prior must be comma-separated numbers: {text!r}") from exc


# --- cost specs ------------------------------------------------------------


def _matrix(params: dict, key: str, default=None):
    if key not in params:
        if default is not None:
            return default
        raise SchemaError(f"missing parameter {key!r}")
    return np.asarray(params[key], dtype=float)


UNIT_PAIR = np.array([[0.0, 1.0], [1.0, 0.0]])


def _potential(params: dict) -> _c.Potential:
    name = params.get("potential", "entropy")
    if name == "entropy":
        return _c.entropy_potential()
    if name == "wald":
        return _c.wald_potential()
    if name == "ti":
        return _c.ti_potential(_matrix(params, "gamma"))
    if name == "quadratic":
        A = _matrix(params, "matrix")
        A = 0.5 * (A + A.T)
        return _c.Potential(lambda q: float(q @ A @ q), lambda q: 2 * A @ q, lambda q: 2 * A, "quadratic")
    raise SchemaError(f"unknown potential {name!r}")


def cost_from_spec(doc) -> _c.CostFunction:
    """Build a cost from ``{"kind": ..., "params": {...}}``.

    A bare kind name, inline JSON text or a path to a JSON file is accepted too.
    TI and LLR default to unit coefficients on two states.
    """
    if isinstance(doc, str):
        text = doc.strip()
        if text.startswith("{"):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid inline cost JSON: {exc}") from exc
        elif not Path(text).exists():
            doc = {"kind": text}
    doc = load_json(doc)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SchemaError("cost spec needs a 'kind' field")
    kind = doc["kind"]
    params = doc.get("params", {}) or {}
    try:
        if kind == "mi":
            return _c.mi_cost()
        if kind == "ti":
            return _c.ti_cost(_matrix(params, "gamma", UNIT_PAIR))
        if kind == "llr":
            return _c.llr_cost(_matrix(params, "beta", UNIT_PAIR))
        if kind == "wald":
            return _c.wald_cost()
        if kind == "mlr":
            return _c.mlr_cost()
        if kind == "tv":
            return _c.tv_cost()
        if kind == "ups":
            return _c.ups_cost(_potential(params), "ups")
        if kind == "bernoulli_direct":
            return _c.bernoulli_direct(_c.named_f(params.get("f", "l2")))
        if kind == "poisson_direct":
            return _c.poisson_direct()
        if kind == "pie":
            return _c.pie(cost_from_spec(params["base"]), int(params.get("n_priors", 200)),
                          int(params.get("seed", 0)))
        if kind == "combine":
            parts = [cost_from_spec(s) for s in params["costs"]]
            g = _c.named_combiner(params.get("g", "sum"), len(parts), params.get("weights"))
            return _c.combine(g, parts)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad parameters for {kind!r}: {exc}") from exc
    raise SchemaError(f"unknown cost kind {kind!r}")


# --- grid tables -----------------------------------------------------------


def write_table_csv(rows, path) -> None:
    """``rows`` are ``(lo, hi, prior, value)`` tuples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lo", "hi", "prior", "value"])
        for lo, hi, p, v in rows:
            w.writerow([repr(float(lo)), repr(float(hi)), repr(float(p)),
                        "inf" if math.isinf(v) else repr(float(v))])


def read_table_csv(path):
    with open(path, newline="") as fh:
        return [(float(r["lo"]), float(r["hi"]), float(r["prior"]), float(r["value"]))
                for r in csv.DictReader(fh)]
