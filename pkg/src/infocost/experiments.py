"""Finite Blackwell experiments and the named experiment families."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._lp import min_residual_lp
from .posteriors import RandomPosterior
from .simplex import BELIEF_TOL, InvalidInput, as_belief

SIGNAL_FLOOR = 1e-12
GARBLE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Experiment:
    """Stochastic channel: row ``theta`` is the signal distribution in state ``theta``."""

    channel: np.ndarray
    signals: tuple = field(default=())
    states: tuple = field(default=())

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.channel, dtype=float))
        if K.ndim != 2 or K.shape[1] == 0:
            raise InvalidInput("channel must be a non-empty matrix")
        if not np.all(np.isfinite(K)) or np.any(K < -BELIEF_TOL):
            raise InvalidInput("channel entries must be finite and nonnegative")
        sums = K.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > BELIEF_TOL):
            raise InvalidInput(f"channel rows sum to {sums.tolist()}, not 1")
        K = np.clip(K, 0.0, None)
        K = K / K.sum(axis=1, keepdims=True)
        K.setflags(write=False)
        signals = tuple(self.signals) or tuple(f"s{j}" for j in range(K.shape[1]))
        states = tuple(self.states) or tuple(f"t{i}" for i in range(K.shape[0]))
        if len(signals) != K.shape[1] or len(states) != K.shape[0]:
            raise InvalidInput("labels do not match channel shape")
        object.__setattr__(self, "channel", K)
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "states", states)

    @property
    def n_states(self) -> int:
        return self.channel.shape[0]

    @property
    def n_signals(self) -> int:
        return self.channel.shape[1]

    def row(self, theta: int) -> np.ndarray:
        return self.channel[theta]


@dataclass(frozen=True)
class Partition:
    cells: tuple

    def __post_init__(self):
        cells = tuple(tuple(sorted(int(t) for t in c)) for c in self.cells)
        flat = [t for c in cells for t in c]
        if any(len(c) == 0 for c in cells):
            raise InvalidInput("partition cells must be nonempty")
        if len(flat) != len(set(flat)) or sorted(flat) != list(range(len(flat))):
            raise InvalidInput("cells must be disjoint and cover 0..n-1")
        object.__setattr__(self, "cells", cells)

    @property
    def n_states(self) -> int:
        return sum(len(c) for c in self.cells)


def bayes_map(sigma: Experiment, p) -> RandomPosterior:
    """Random posterior induced by observing ``sigma`` under prior ``p``."""
    p = as_belief(p)
    if p.size != sigma.n_states:
        raise InvalidInput("prior and experiment have different state counts")
    joint = p[:, None] * sigma.channel
    marg = joint.sum(axis=0)
    keep = marg >= SIGNAL_FLOOR
    w = marg[keep]
    Q = (joint[:, keep] / w).T
    return RandomPosterior(w / w.sum(), Q)


def product(sigma: Experiment, other: Experiment) -> Experiment:
    """Conditionally independent signals from both experiments."""
    if sigma.n_states != other.n_states:
        raise InvalidInput("experiments have different state counts")
    K = np.einsum("ti,tj->tij", sigma.channel, other.channel).reshape(sigma.n_states, -1)
    labels = tuple(f"{a}|{b}" for a, b in itertools.product(sigma.signals, other.signals))
    return Experiment(K, labels, sigma.states)


def garble(sigma: Experiment, G) -> Experiment:
    G = np.asarray(G, dtype=float)
    return Experiment(sigma.channel @ G, (), sigma.states)


def blackwell_geq(hi: Experiment, lo: Experiment, tol: float = GARBLE_TOL) -> bool:
    """True when some row-stochastic ``G`` satisfies ``lo = hi @ G``."""
    if hi.n_states != lo.n_states:
        raise InvalidInput("experiments have different state counts")
    A, B = hi.channel, lo.channel
    n, m = A.shape[1], B.shape[1]
    t = A.shape[0]
    # unknown G flattened row-major; (A @ G)[k, j] = sum_i A[k, i] G[i, j]
    fit = np.zeros((t * m, n * m))
    for k in range(t):
        for j in range(m):
            fit[k * m + j, j::m] = A[k]
    stoch = np.zeros((n, n * m))
    for i in range(n):
        stoch[i, i * m:(i + 1) * m] = 1.0
    G = min_residual_lp(fit, B.ravel(), stoch, np.ones(n))
    if G is None:
        return False
    return float(np.abs(fit @ G - B.ravel()).max()) <= tol


def _require_binary(n_states: int):
    if n_states != 2:
        raise InvalidInput("this experiment family needs exactly two states")


def bernoulli(ell: float) -> Experiment:
    """Binary-signal experiment whose signal ``s_theta`` has log-likelihood ratio ``+-ell``.

    Row ``theta`` puts mass ``e^ell / (1 + e^ell)`` on signal ``s_theta``.
    """
    if not ell >= 0:
        raise InvalidInput("ell must be nonnegative")
    hi = 1.0 / (1.0 + math.exp(-ell))
    lo = 1.0 / (1.0 + math.exp(ell))
    return Experiment(np.array([[hi, lo], [lo, hi]]), ("s0", "s1"), ("t0", "t1"))


def poisson_dilution(lam: float) -> Experiment:
    """Reveals the state with probability ``1 - e^-lam``, otherwise sends ``s_empty``."""
    if not lam >= 0:
        raise InvalidInput("lambda must be nonnegative")
    r = 1.0 if math.isinf(lam) else -math.expm1(-lam)
    K = np.array([[r, 0.0, 1.0 - r], [0.0, r, 1.0 - r]])
    return Experiment(K, ("s0", "s1", "s_empty"), ("t0", "t1"))


def partition_experiment(P: Partition) -> Experiment:
    K = np.zeros((P.n_states, len(P.cells)))
    for j, cell in enumerate(P.cells):
        K[list(cell), j] = 1.0
    return Experiment(K, tuple(f"E{j}" for j in range(len(P.cells))))


def uninformative(n_states: int) -> Experiment:
    return Experiment(np.ones((n_states, 1)))


def full_revelation(n_states: int) -> Experiment:
    return Experiment(np.eye(n_states))


def set_partitions(n: int):
    """All partitions of ``range(n)`` (restricted-growth enumeration)."""

    def grow(i, blocks):
        if i == n:
            yield Partition(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            yield from grow(i + 1, blocks)
            b.pop()
        blocks.append([i])
        yield from grow(i + 1, blocks)
        blocks.pop()

    yield from grow(0, [])


def random_experiment(
    rng: np.random.Generator, n_states: int = 2, n_signals: int | None = None
) -> Experiment:
    """Strictly positive Dirichlet(1) channel with 2 to 4 signals."""
    m = int(rng.integers(2, 5)) if n_signals is None else int(n_signals)
    return Experiment(rng.dirichlet(np.ones(m), size=n_states))


def random_garbling(rng: np.random.Generator, n_in: int, n_out: int | None = None) -> np.ndarray:
    m = int(rng.integers(1, 5)) if n_out is None else int(n_out)
    return rng.dirichlet(np.ones(m), size=n_in)
