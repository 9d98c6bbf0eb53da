"""Beliefs on a finite state set and the matrix calculus used for kernels.

Beliefs are plain ``numpy`` vectors.  Quadratic forms are only ever compared
on the tangent space ``{y : sum(y) = 0}``, so every comparison here projects
onto an orthonormal basis of that subspace first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.linalg import null_space

BELIEF_TOL = 1e-9
TANGENT_TOL = 1e-12
STRICT_FLOOR = 1e-10

Verdict = Literal["geq", "gg", "leq", "ll", "equal", "incomparable"]


class InvalidInput(ValueError):
    """Raised when an input violates a documented invariant."""


def as_belief(probs, tol: float = BELIEF_TOL) -> np.ndarray:
    """Validate ``probs`` as a probability vector and renormalize it.

    Entries within ``tol`` below zero are clipped; the total must be within
    ``tol`` of one.
    """
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise InvalidInput("belief must be a non-empty finite vector")
    if np.any(p < -tol):
        raise InvalidInput(f"belief has negative entries: {p}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise InvalidInput(f"belief sums to {total!r}, not 1")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def support(p: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.asarray(p) > 0)


def is_interior(p: np.ndarray) -> bool:
    return bool(np.all(np.asarray(p) > 0))


def as_tangent(y, tol: float = TANGENT_TOL) -> np.ndarray:
    v = np.asarray(y, dtype=float).ravel()
    if abs(v.sum()) > tol * max(1.0, np.abs(v).max(initial=0.0)):
        raise InvalidInput("tangent vector must sum to zero")
    return v


@lru_cache(maxsize=None)
def _tangent_basis(d: int) -> np.ndarray:
    basis = null_space(np.ones((1, d)))
    basis.setflags(write=False)
    return basis


def tangent_basis(d: int) -> np.ndarray:
    """Orthonormal ``d x (d-1)`` basis of the tangent space of the simplex."""
    return _tangent_basis(int(d))


def _check_square(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    return A


def _check_symmetric(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    A = _check_square(A)
    scale = max(1.0, np.abs(A).max(initial=0.0))
    if np.abs(A - A.T).max(initial=0.0) > tol * scale:
        raise InvalidInput("matrix must be symmetric")
    return A


def normalize_kernel(beta, p) -> np.ndarray:
    """Symmetrize ``beta`` and project it so that ``k @ p == 0``.

    Quadratic forms on tangent vectors are unchanged, and a matrix that is
    already symmetric with ``beta @ p == 0`` is returned as is.
    """
    beta = _check_square(beta, "beta")
    p = np.asarray(p, dtype=float)
    d = p.size
    if beta.shape != (d, d):
        raise InvalidInput("beta and p have mismatched dimensions")
    one = np.ones(d)
    left = np.eye(d) - np.outer(one, p)
    right = np.eye(d) - np.outer(p, one)
    k = 0.5 * left @ (beta + beta.T) @ right
    return 0.5 * (k + k.T)


def tangent_eigenvalues(A) -> np.ndarray:
    """Eigenvalues of the quadratic form ``y -> y^T A y`` restricted to unit tangent ``y``."""
    A = _check_symmetric(A)
    U = tangent_basis(A.shape[0])
    M = U.T @ A @ U
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def matrix_seminorm(A) -> float:
    """``max |y^T A y|`` over unit tangent vectors ``y``."""
    ev = tangent_eigenvalues(A)
    if ev.size == 0:
        return 0.0
    return float(np.abs(ev).max())


def negative_part_seminorm(A) -> float:
    ev = tangent_eigenvalues(A)
    return float(max(0.0, -ev.min(initial=0.0)))


def psd_compare(A, B, tol: float = STRICT_FLOOR) -> Verdict:
    """Compare two symmetric matrices in the tangent psd order."""
    A = _check_symmetric(A)
    B = _check_symmetric(B)
    if A.shape != B.shape:
        raise InvalidInput("matrices must have the same shape")
    ev = tangent_eigenvalues(A - B)
    lo, hi = float(ev.min()), float(ev.max())
    if max(abs(lo), abs(hi)) <= tol:
        return "equal"
    if lo > tol:
        return "gg"
    if lo >= -tol:
        return "geq"
    if hi < -tol:
        return "ll"
    if hi <= tol:
        return "leq"
    return "incomparable"


@dataclass(frozen=True)
class BeliefGrid:
    """Sorted grid of binary-state beliefs, keyed by the probability of state 1.

    ``uniform`` is the lattice ``{0, 1/(n-1), ..., 1}``.  ``logodds`` keeps the
    two endpoints and spaces the ``n - 2`` interior nodes evenly in log-odds,
    which makes Bernoulli-form targets symmetric in grid index.
    """

    nodes: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise InvalidInput("grid needs at least three nodes")
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise InvalidInput("grid nodes must increase strictly from 0 to 1")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, n: int = 41) -> "BeliefGrid":
        return cls(np.linspace(0.0, 1.0, int(n)), "uniform")

    @classmethod
    def logodds(cls, n: int = 41, span: float = 4.0) -> "BeliefGrid":
        if n < 5:
            raise InvalidInput("log-odds grid needs n >= 5")
        u = np.linspace(-span, span, int(n) - 2)
        inner = 1.0 / (1.0 + np.exp(-u))
        return cls(np.concatenate([[0.0], inner, [1.0]]), "logodds")

    @property
    def n(self) -> int:
        return self.nodes.size

    def belief(self, i: int) -> np.ndarray:
        x = self.nodes[i]
        return np.array([1.0 - x, x])

    def index_of(self, x: float, tol: float = 1e-12) -> int:
        i = int(np.argmin(np.abs(self.nodes - x)))
        if abs(self.nodes[i] - x) > tol:
            raise InvalidInput(f"{x} is not a grid node")
        return i
