"""Finite-support random posteriors, the mean-preserving-spread order and
two-step learning strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._lp import min_residual_lp
from .simplex import BELIEF_TOL, InvalidInput, as_belief

MERGE_TOL = 1e-9
MPS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RandomPosterior:
    """Distribution over beliefs with finitely many atoms.

    ``weights`` has shape ``(m,)`` and ``beliefs`` shape ``(m, d)``.  Atoms
    closer than ``MERGE_TOL`` componentwise are merged on construction, in
    order of first appearance.
    """

    weights: np.ndarray
    beliefs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        Q = np.atleast_2d(np.asarray(self.beliefs, dtype=float))
        if Q.shape[0] != w.size or w.size == 0:
            raise InvalidInput("weights and beliefs must have matching, non-zero length")
        if not np.all(np.isfinite(w)) or np.any(w < -BELIEF_TOL):
            raise InvalidInput("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > BELIEF_TOL:
            raise InvalidInput(f"weights sum to {w.sum()!r}, not 1")
        Q = _as_beliefs(Q)
        keep = w > 0
        w, Q = w[keep], Q[keep]
        w, Q = _merge(w / w.sum(), Q)
        w.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "beliefs", Q)
        prior = w @ Q
        prior = prior / prior.sum()
        prior.setflags(write=False)
        object.__setattr__(self, "_prior", prior)

    @classmethod
    def point(cls, p) -> "RandomPosterior":
        return cls(np.ones(1), np.atleast_2d(as_belief(p)))

    @classmethod
    def from_atoms(cls, atoms) -> "RandomPosterior":
        """Build from an iterable of ``(weight, belief)`` pairs."""
        atoms = list(atoms)
        w = np.array([a[0] for a in atoms], dtype=float)
        Q = np.array([np.asarray(a[1], dtype=float) for a in atoms])
        return cls(w, Q)

    @property
    def prior(self) -> np.ndarray:
        return self._prior

    @property
    def dim(self) -> int:
        return self.beliefs.shape[1]

    @property
    def size(self) -> int:
        return self.weights.size

    def is_trivial(self) -> bool:
        return self.size == 1

    def atoms(self):
        return list(zip(self.weights, self.beliefs))

    def __repr__(self) -> str:
        parts = ", ".join(f"{w:.4g}:{np.round(q, 4).tolist()}" for w, q in self.atoms())
        return f"RandomPosterior({parts})"


def _as_beliefs(Q: np.ndarray) -> np.ndarray:
    """Row-wise :func:`as_belief`."""
    if not np.all(np.isfinite(Q)) or Q.min() < -BELIEF_TOL:
        raise InvalidInput("beliefs must be finite and nonnegative")
    sums = Q.sum(axis=1)
    if np.abs(sums - 1.0).max() > BELIEF_TOL:
        raise InvalidInput(f"belief rows sum to {sums.tolist()}, not 1")
    Q = np.clip(Q, 0.0, None)
    return Q / Q.sum(axis=1, keepdims=True)


def _merge(w: np.ndarray, Q: np.ndarray, tol: float = MERGE_TOL):
    close = np.all(np.abs(Q[:, None, :] - Q[None, :, :]) <= tol, axis=2)
    if np.count_nonzero(close) == w.size:
        return w.copy(), Q.copy()
    out_w: list[float] = []
    out_q: list[np.ndarray] = []
    for wi, qi in zip(w, Q):
        for k, qk in enumerate(out_q):
            if np.all(np.abs(qk - qi) <= tol):
                out_w[k] += wi
                break
        else:
            out_w.append(float(wi))
            out_q.append(qi.copy())
    return np.array(out_w), np.vstack(out_q)


def prior_of(pi: RandomPosterior) -> np.ndarray:
    return pi.prior


def variance(pi: RandomPosterior) -> float:
    dev = pi.beliefs - pi.prior
    return float(pi.weights @ np.einsum("ij,ij->i", dev, dev))


def mixture(weights, posteriors) -> RandomPosterior:
    """Weighted mixture of random posteriors (a distribution over atoms)."""
    weights = np.asarray(weights, dtype=float)
    w = np.concatenate([a * pi.weights for a, pi in zip(weights, posteriors)])
    Q = np.vstack([pi.beliefs for pi in posteriors])
    return RandomPosterior(w / w.sum(), Q)


def dilute(pi: RandomPosterior, alpha: float) -> RandomPosterior:
    """``alpha * pi + (1 - alpha) * delta_{prior}``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInput(f"dilution weight {alpha} outside [0, 1]")
    if alpha == 1.0:
        return pi
    if alpha == 0.0:
        return RandomPosterior.point(pi.prior)
    return mixture([alpha, 1.0 - alpha], [pi, RandomPosterior.point(pi.prior)])


def binary_coords(pi: RandomPosterior) -> np.ndarray:
    if pi.dim != 2:
        raise InvalidInput("binary coordinates need exactly two states")
    return pi.beliefs[:, 1]


def _integrated_cdf(x: np.ndarray, w: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.maximum(x[None, :] - t[:, None], 0.0) @ w


def mps_geq_binary(hi: RandomPosterior, lo: RandomPosterior, tol: float = MPS_TOL) -> bool:
    """Integrated-CDF test: ``E_hi[(x-t)+] >= E_lo[(x-t)+]`` at every kink ``t``."""
    if abs(hi.prior[1] - lo.prior[1]) > tol:
        return False
    xh, xl = binary_coords(hi), binary_coords(lo)
    t = np.concatenate([xh, xl])
    gap = _integrated_cdf(xh, hi.weights, t) - _integrated_cdf(xl, lo.weights, t)
    return bool(gap.min() >= -tol)


def mps_geq_lp(hi: RandomPosterior, lo: RandomPosterior, tol: float = MPS_TOL) -> bool:
    """Feasibility LP for a splitting kernel carrying ``lo`` onto ``hi``.

    Variables are the joint masses ``J[i, j] = lo.w_i T(j | i)``.
    """
    if hi.dim != lo.dim:
        raise InvalidInput("random posteriors live on different state sets")
    if np.abs(hi.prior - lo.prior).max() > tol:
        return False
    m, n, d = lo.size, hi.size, lo.dim
    rows, rhs = [], []
    for i in range(m):
        r = np.zeros((m, n))
        r[i, :] = 1.0
        rows.append(r.ravel())
        rhs.append(lo.weights[i])
        for k in range(d):
            r = np.zeros((m, n))
            r[i, :] = hi.beliefs[:, k]
            rows.append(r.ravel())
            rhs.append(lo.weights[i] * lo.beliefs[i, k])
    for j in range(n):
        r = np.zeros((m, n))
        r[:, j] = 1.0
        rows.append(r.ravel())
        rhs.append(hi.weights[j])
    A = np.array(rows)
    b = np.array(rhs)
    J = min_residual_lp(A, b, np.ones((1, m * n)), np.ones(1))
    return J is not None and float(np.abs(A @ J - b).max()) <= tol


def mps_geq(hi: RandomPosterior, lo: RandomPosterior, tol: float = MPS_TOL) -> bool:
    """True when ``hi`` is a mean-preserving spread of ``lo``."""
    if hi.dim == 2 and lo.dim == 2:
        return mps_geq_binary(hi, lo, tol)
    return mps_geq_lp(hi, lo, tol)


@dataclass(frozen=True, eq=False)
class TwoStepStrategy:
    """Distribution over second-round random posteriors."""

    weights: np.ndarray
    branches: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        branches = tuple(self.branches)
        if w.size != len(branches) or w.size == 0:
            raise InvalidInput("one weight per branch required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > BELIEF_TOL:
            raise InvalidInput("branch weights must be positive and sum to 1")
        dims = {b.dim for b in branches}
        if len(dims) != 1:
            raise InvalidInput("branches live on different state sets")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "branches", branches)


def strategy_first_round(strategy: TwoStepStrategy) -> RandomPosterior:
    Q = np.vstack([b.prior for b in strategy.branches])
    return RandomPosterior(strategy.weights, Q)


def strategy_mean(strategy: TwoStepStrategy) -> RandomPosterior:
    return mixture(strategy.weights, strategy.branches)


# --- samplers -------------------------------------------------------------


def random_belief(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.dirichlet(np.ones(d))


def random_posterior(rng: np.random.Generator, d: int, size: int | None = None) -> RandomPosterior:
    """Support size uniform on ``{2..5}``, interior Dirichlet(1) beliefs and weights."""
    m = int(rng.integers(2, 6)) if size is None else int(size)
    return RandomPosterior(rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(d), size=m))


def random_posterior_with_prior(rng: np.random.Generator, p: np.ndarray, size: int | None = None) -> RandomPosterior:
    """Interior random posterior whose barycenter is exactly ``p``.

    Atoms are drawn around ``p`` and then shrunk toward it just enough to keep
    every atom inside the simplex after recentring.
    """
    p = np.asarray(p, dtype=float)
    d = p.size
    m = int(rng.integers(2, 6)) if size is None else int(size)
    w = rng.dirichlet(np.ones(m))
    Q = rng.dirichlet(np.ones(d), size=m)
    dev = Q - w @ Q
    # largest s with p + s*dev >= 0 everywhere, then back off to stay interior
    neg = dev < 0
    s_max = np.min(p[None, :].repeat(m, 0)[neg] / -dev[neg]) if neg.any() else 1.0
    s = min(1.0, s_max) * rng.uniform(0.2, 0.95)
    return RandomPosterior(w, p + s * dev)


def random_strategy(
    rng: np.random.Generator, d: int, max_branches: int = 4, max_atoms: int = 4
) -> TwoStepStrategy:
    """Strategy with up to ``max_branches`` branches of up to ``max_atoms`` interior atoms each."""
    nb = int(rng.integers(1, max_branches + 1))
    branches = tuple(
        random_posterior(rng, d, size=int(rng.integers(1, max_atoms + 1))) for _ in range(nb)
    )
    return TwoStepStrategy(rng.dirichlet(np.ones(nb)), branches)


def split_atoms(rng: np.random.Generator, pi: RandomPosterior) -> RandomPosterior:
    """Random mean-preserving spread of ``pi``: each atom splits into interior children."""
    parts = []
    for w, q in pi.atoms():
        k = int(rng.integers(1, 4))
        if k == 1:
            parts.append((w, RandomPosterior.point(q)))
            continue
        child = random_posterior_with_prior(rng, q, size=k)
        parts.append((w, child))
    return mixture([a for a, _ in parts], [c for _, c in parts])


def random_mps_pair(rng: np.random.Generator, d: int):
    """``(lo, hi)`` with ``hi`` a mean-preserving spread of ``lo``."""
    lo = random_posterior(rng, d)
    return lo, split_atoms(rng, lo)
