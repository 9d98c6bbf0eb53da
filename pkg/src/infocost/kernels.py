"""Kernel estimation and the kernel-based tools built on it.

A cost is locally quadratic at ``p`` when small random posteriors ``pi``
around ``p`` cost approximately ``E_pi[(q - p)^T k (q - p)] / 2``.  The kernel
``k`` is recovered here from probes at a ladder of scales.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .costs import INF, CostFunction, Potential, combined_hessian, ups_cost
from .experiments import bayes_map, bernoulli
from .posteriors import RandomPosterior, random_posterior
from .reports import AxiomReport
from .simplex import InvalidInput, matrix_seminorm, normalize_kernel, tangent_basis

KINK_SLOPE = 1.5
DEFAULT_LADDER = (1e-2, 1e-3, 1e-4)


class NotLocallyQuadratic(Exception):
    """Every probe around the anchor is outside the cost's domain."""


class KinkedCost(NotLocallyQuadratic):
    """Cost shrinks slower than quadratically as probes shrink."""

    def __init__(self, slope: float):
        super().__init__(f"log-log slope {slope:.3f} below {KINK_SLOPE}")
        self.slope = slope


@dataclass(frozen=True)
class KernelEstimate:
    kernel: np.ndarray
    anchor: np.ndarray
    residual: float
    ladder: tuple
    slope: float


def probe_directions(d: int) -> list[np.ndarray]:
    """``e_i - e_j`` for all pairs, then ``(d-1)(d-2)/2`` mixed directions."""
    dirs = []
    for i, j in itertools.combinations(range(d), 2):
        y = np.zeros(d)
        y[i], y[j] = 1.0, -1.0
        dirs.append(y)
    extra = (d - 1) * (d - 2) // 2
    for a, b, c in itertools.islice(itertools.combinations(range(d), 3), extra):
        y = np.zeros(d)
        y[a], y[b], y[c] = 1.0, 1.0, -2.0
        dirs.append(y)
    return dirs


def symmetric_probe(p: np.ndarray, y: np.ndarray, t: float) -> RandomPosterior:
    return RandomPosterior(np.array([0.5, 0.5]), np.vstack([p + t * y, p - t * y]))


def _second_moment(pi: RandomPosterior, p: np.ndarray) -> np.ndarray:
    dev = pi.beliefs - p
    return (dev * pi.weights[:, None]).T @ dev


def _fit(U: np.ndarray, moments: list[np.ndarray], values: list[float]) -> np.ndarray:
    """Least-squares ``S`` with ``value ~ tr(U S U^T M) / 2``, rows scaled by ``tr M``."""
    r = U.shape[1]
    pairs = [(a, b) for a in range(r) for b in range(a, r)]
    A = np.empty((len(values), len(pairs)))
    rhs = np.empty(len(values))
    for n, (M, v) in enumerate(zip(moments, values)):
        R = U.T @ M @ U
        s = np.trace(M)
        A[n] = [0.5 * R[a, b] * (1.0 if a == b else 2.0) / s for a, b in pairs]
        rhs[n] = v / s
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    S = np.zeros((r, r))
    for (a, b), c in zip(pairs, coef):
        S[a, b] = S[b, a] = c
    return U @ S @ U.T


def estimate_kernel(C: CostFunction, p, ladder=DEFAULT_LADDER) -> KernelEstimate:
    """Fit the local quadratic form of ``C`` at interior ``p``.

    Each scale gives its own least-squares kernel; the two smallest scales
    are combined by Richardson extrapolation with error order two.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise InvalidInput("kernel estimation needs an interior prior")
    d = p.size
    U = tangent_basis(d)
    dirs = probe_directions(d)
    probe = C.probe or symmetric_probe
    ladder = tuple(sorted((float(t) for t in ladder), reverse=True))
    if len(ladder) < 2:
        raise InvalidInput("ladder needs at least two scales")

    # near the boundary the whole ladder shrinks with the smallest coordinate
    shrink = min(1.0, 2.0 * p.min())
    fits, values, moments_all = [], [], []
    for t in ladder:
        ms, vs = [], []
        for y in dirs:
            ts = t * shrink / np.abs(y).max()
            pi = probe(p, y, ts)
            ms.append(_second_moment(pi, p))
            vs.append(C(pi))
        values.append(vs)
        moments_all.append(ms)
        if all(math.isinf(v) for v in vs):
            raise NotLocallyQuadratic(f"{C.name} is infinite on all probes at scale {t}")
        if any(math.isinf(v) for v in vs):
            raise NotLocallyQuadratic(f"{C.name} is infinite on some probes at scale {t}")

    # log-log slope of probe cost against probe size, largest to smallest scale
    slopes = []
    for j in range(len(dirs)):
        c0, c1 = values[0][j], values[-1][j]
        s0, s1 = np.trace(moments_all[0][j]), np.trace(moments_all[-1][j])
        if c0 > 0 and c1 > 0:
            slopes.append(math.log(c0 / c1) / (0.5 * math.log(s0 / s1)))
    slope = min(slopes) if slopes else 2.0
    if slope < KINK_SLOPE:
        raise KinkedCost(slope)

    for ms, vs in zip(moments_all, values):
        fits.append(_fit(U, ms, vs))
    ratio = (ladder[-2] / ladder[-1]) ** 2
    k = (ratio * fits[-1] - fits[-2]) / (ratio - 1.0)
    k = normalize_kernel(k, p)

    resid = 0.0
    for M, v in zip(moments_all[-1], values[-1]):
        resid = max(resid, abs(v - 0.5 * np.trace(k @ M)) / np.trace(M))
    return KernelEstimate(k, p, float(resid), ladder, float(slope))


def finite_difference_hessian(H: Callable[[np.ndarray], float], p: np.ndarray, h: float = 1e-4) -> np.ndarray:
    d = p.size
    out = np.zeros((d, d))
    E = np.eye(d) * h
    for i in range(d):
        for j in range(i, d):
            v = (H(p + E[i] + E[j]) - H(p + E[i] - E[j]) - H(p - E[i] + E[j]) + H(p - E[i] - E[j]))
            out[i, j] = out[j, i] = v / (4 * h * h)
    return out


def analytic_kernel(C: CostFunction, p) -> np.ndarray:
    """Normalized Hessian of the cost's potential (or the combination rule)."""
    p = np.asarray(p, dtype=float)
    k = combined_hessian(C, p)
    if k is not None:
        return normalize_kernel(k, p)
    H = C.potential
    if H is None:
        raise InvalidInput(f"{C.name} has no potential")
    if H.hess is not None:
        k = H.hess(p)
    else:
        k = finite_difference_hessian(H, p)
    if not np.all(np.isfinite(k)):
        raise NotLocallyQuadratic(f"potential of {C.name} is infinite near {p}")
    return normalize_kernel(k, p)


def experimental_kernel(k, p) -> np.ndarray:
    """``diag(p) k diag(p)``."""
    p = np.asarray(p, dtype=float)
    kap = p[:, None] * np.asarray(k, dtype=float) * p[None, :]
    return 0.5 * (kap + kap.T)


def check_lpi(C: CostFunction, priors, tol: float = 1e-3, ladder=DEFAULT_LADDER) -> AxiomReport:
    """Worst pairwise seminorm gap between experimental kernels at ``priors``."""
    priors = [np.asarray(p, dtype=float) for p in priors]
    kaps = [experimental_kernel(estimate_kernel(C, p, ladder).kernel, p) for p in priors]
    worst, pair = 0.0, None
    for i, j in itertools.combinations(range(len(kaps)), 2):
        gap = matrix_seminorm(kaps[i] - kaps[j])
        if gap > worst:
            worst, pair = gap, (i, j)
    witness = None
    if pair is not None:
        witness = {"priors": [priors[pair[0]].tolist(), priors[pair[1]].tolist()],
                   "kappas": [kaps[pair[0]].tolist(), kaps[pair[1]].tolist()]}
    return AxiomReport("lpi", C.name, len(priors), worst, tol, witness,
                       evaluations=len(priors))


def reduced_hessian(k: np.ndarray) -> np.ndarray:
    """Quadratic form of ``k`` in coordinates ``p_1..p_{n-1}`` with ``p_n`` eliminated."""
    n = k.shape[0] - 1
    return k[:n, :n] - k[:n, n][:, None] - k[n, :n][None, :] + k[n, n]


def integrable_check(
    kernel_field: Callable[[np.ndarray], np.ndarray],
    points=None,
    h: float = 1e-4,
    rel_tol: float = 1e-3,
    seed: int = 0,
) -> bool:
    """Is ``p -> k(p)`` the Hessian field of some potential?

    Always true with two states.  Otherwise the finite-difference derivative
    ``d_l G_ij`` of the reduced Hessian must be symmetric in ``(i, j, l)`` at
    every mesh point.
    """
    if points is None:
        rng = np.random.default_rng(seed)
        d0 = kernel_field(np.full(3, 1 / 3)).shape[0]
        points = [0.15 + 0.7 * rng.dirichlet(np.ones(d0)) for _ in range(8)]
        points = [q / q.sum() for q in points]
    points = [np.asarray(q, dtype=float) for q in points]
    d = points[0].size
    if d == 2:
        return True
    n = d - 1
    for p in points:
        dG = np.zeros((n, n, n))
        for l in range(n):
            e = np.zeros(d)
            e[l], e[n] = h, -h
            dG[l] = (reduced_hessian(kernel_field(p + e)) - reduced_hessian(kernel_field(p - e))) / (2 * h)
        scale = np.abs(dG).max()
        if scale == 0:
            continue
        # d_l G_ij must equal d_j G_il
        asym = np.abs(dG - dG.transpose(2, 1, 0)).max()
        if asym > rel_tol * scale:
            return False
    return True


def _logistic(u):
    return 1.0 / (1.0 + np.exp(-u))


@dataclass(frozen=True)
class BinaryPotential:
    """Potential ``G(p_1)`` integrated from a scalar curvature on a log-odds grid."""

    u: np.ndarray
    G: np.ndarray
    dG: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicSpline(self.u, self.G))
        object.__setattr__(self, "_dspline", CubicSpline(self.u, self.dG))

    def value(self, x: float) -> float:
        if not 0.0 < x < 1.0:
            return INF
        u = math.log(x) - math.log1p(-x)
        if u < self.u[0] or u > self.u[-1]:
            return INF
        return float(self._spline(u))

    def derivative(self, x: float) -> float:
        u = math.log(x) - math.log1p(-x)
        return float(self._dspline(u))

    def as_potential(self) -> Potential:
        return Potential(
            lambda q: self.value(q[1]),
            lambda q: np.array([0.0, self.derivative(q[1])]),
            None,
            "G",
        )

    def cost(self) -> CostFunction:
        return ups_cost(self.as_potential(), "ups[G]", n_states=2, closed_form=False)


def _curvature_of(source) -> Callable[[np.ndarray], float]:
    e = np.array([1.0, -1.0])
    if isinstance(source, CostFunction):
        def curv(p):
            return float(e @ estimate_kernel(source, p).kernel @ e)
    else:
        def curv(p):
            return float(e @ np.asarray(source(p)) @ e)
    return curv


def integrate_potential_binary(source, span: float = 12.0, n_fine: int = 4801, n_coarse: int = 193) -> BinaryPotential:
    """Integrate ``G'' = c`` twice, anchored by ``G(1/2) = G'(1/2) = 0``.

    ``source`` is a cost (its kernel is estimated) or a kernel field.  The
    scalar ``c p^2 (1-p)^2`` is sampled on ``n_coarse`` log-odds nodes and
    splined; integration runs in log-odds ``u`` where ``dp = p(1-p) du``.
    """
    curv = _curvature_of(source)
    uc = np.linspace(-span, span, n_coarse)
    xc = _logistic(uc)
    scal = np.array([curv(np.array([1 - x, x])) * (x * (1 - x)) ** 2 for x in xc])
    s_spline = CubicSpline(uc, scal)

    u = np.linspace(-span, span, n_fine)
    x = _logistic(u)
    v = x * (1 - x)
    mid = n_fine // 2
    # slope g(u) = G'(p(u)) solves dg/du = c p(1-p) = s / (p(1-p))
    integrand = s_spline(u) / v
    g = _cumulative_from(integrand, u, mid)
    G = _cumulative_from(g * v, u, mid)
    return BinaryPotential(u, G, g)


def _cumulative_from(y: np.ndarray, u: np.ndarray, mid: int) -> np.ndarray:
    out = np.zeros_like(y)
    right = cumulative_simpson(y[mid:], x=u[mid:], initial=0.0)
    left = cumulative_simpson(y[: mid + 1][::-1], x=-u[: mid + 1][::-1], initial=0.0)
    out[mid:] = right
    out[: mid + 1] = -left[::-1]
    return out


def flie_check(
    C: CostFunction,
    H: Potential | None = None,
    trials: int = 2000,
    seed: int = 0,
    tol: float | None = None,
) -> AxiomReport:
    """Worst gap ``ups_cost(H)(pi) - C(pi)`` over the domain of ``C``.

    Bernoulli direct costs are scanned exactly over a log grid of ``ell``
    and a spread of priors; other costs are sampled.
    """
    tol = C.tolerance if tol is None else tol
    f = C.meta.get("f")
    U = ups_cost(H) if H is not None else None
    worst, witness, evals = -INF, None, 0
    if C.meta.get("kind") == "bernoulli_direct":
        ells = np.geomspace(1e-3, 10.0, 400)
        priors = [0.5] if H is None else [0.5, 0.2, 0.85]
        for x in priors:
            p = np.array([1 - x, x])
            for ell in ells:
                if U is None:
                    lower = f.fpp0 * ell * math.tanh(ell / 2)
                else:
                    lower = U(bayes_map(bernoulli(ell), p))
                    if math.isinf(lower):
                        continue
                gap = lower - f(ell)
                evals += 1
                if gap > worst:
                    worst, witness = gap, {"ell": float(ell), "prior": p.tolist()}
        return AxiomReport("flie", C.name, evals, worst, tol, witness, seed, evals,
                           details={"mode": "ell-scan"})
    if U is None:
        raise InvalidInput("flie_check needs a potential for non-Bernoulli costs")
    rng = np.random.default_rng(seed)
    d = C.n_states or 2
    for _ in range(trials):
        pi = random_posterior(rng, d)
        c = C(pi)
        evals += 1
        if math.isinf(c):
            continue
        lower = U(pi)
        if math.isinf(lower):
            continue
        gap = lower - c
        if gap > worst:
            worst = gap
            witness = {"atoms": [{"w": float(w), "q": q.tolist()} for w, q in pi.atoms()]}
    return AxiomReport("flie", C.name, trials, worst, tol, witness, seed, evals)
