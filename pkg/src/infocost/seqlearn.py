"""Sequential learning on binary-state belief grids.

A :class:`GridCostTable` stores the cost of every binary random posterior
whose atoms and barycenter sit on grid nodes, indexed ``[lo, hi, p]``.  One
:func:`psi_step` lets each target be reached by a binary first round followed
by binary second rounds (with free disposal); :func:`phi_iterate` repeats the
step to a fixed point.

The inner sweep is the hot loop of the package.  It runs as a numba kernel
when numba is importable and ``INFOCOST_DISABLE_NUMBA`` is unset, otherwise
as a numpy sweep vectorized over ``(first-round split, prior)`` blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _accel
from ._accel import njit
from .costs import INF, CostFunction, tv_cost, wald_cost
from .experiments import Experiment, blackwell_geq
from .kernels import (
    KinkedCost,
    NotLocallyQuadratic,
    estimate_kernel,
    flie_check,
    integrate_potential_binary,
)
from .posteriors import RandomPosterior, dilute
from .simplex import BeliefGrid, InvalidInput


# --- Bernoulli random walk ------------------------------------------------


def bernoulli_walk_cost(f: Callable[[float], float], ell: float, n: int) -> float:
    """Expected cost of reaching a Bernoulli(ell) outcome in ``2^n``-fold finer steps.

    ``2^n f(ell / 2^n) prod_{k=1..n} (1 + e^{ell/2^k})^2 / (1 + e^{ell/2^{k-1}})``.
    Each factor equals ``2 (1 - sinh^2(a/2) / cosh a)`` with ``a = ell / 2^k``;
    the powers of two are applied exactly and the rest is summed in log space.
    """
    if ell < 0 or n < 0:
        raise InvalidInput("need ell >= 0 and n >= 0")
    if n == 0:
        return float(f(ell))
    fs = float(f(ell / 2.0**n))
    if fs == 0.0:
        return 0.0
    a = ell / 2.0 ** np.arange(1, n + 1)
    log_rest = float(np.sum(np.log1p(-np.sinh(a / 2) ** 2 / np.cosh(a))))
    return math.ldexp(fs, 2 * n) * math.exp(log_rest)


def bernoulli_walk_limit(f_pp0: float, ell: float) -> float:
    """``f''(0) ell (e^ell - 1) / (1 + e^ell)``, the fine-step limit of the walk cost."""
    if ell < 0:
        raise InvalidInput("ell must be nonnegative")
    return float(f_pp0 * ell * math.tanh(ell / 2.0))


def walk_expected_steps(ell: float, n: int, state: int = 1) -> float:
    """Exact expected step count of the absorbing walk by a linear solve.

    Log-odds move by ``+-ell/2^n`` per Bernoulli observation and the walk
    stops at ``+-ell``.
    """
    N = 2**n
    delta = ell / N
    up = 1.0 / (1.0 + math.exp(-delta)) if state == 1 else 1.0 / (1.0 + math.exp(delta))
    size = 2 * N - 1  # interior positions -N+1 .. N-1
    A = np.eye(size)
    for i in range(size):
        if i + 1 < size:
            A[i, i + 1] -= up
        if i - 1 >= 0:
            A[i, i - 1] -= 1.0 - up
    steps = np.linalg.solve(A, np.ones(size))
    return float(steps[N - 1])


@njit
def _simulate_walk_numba(N, up, n_paths, seed):
    np.random.seed(seed)
    out = np.empty(n_paths)
    for i in range(n_paths):
        pos = 0
        steps = 0
        while -N < pos < N:
            if np.random.random() < up:
                pos += 1
            else:
                pos -= 1
            steps += 1
        out[i] = steps
    return out


def _simulate_walk_numpy(N, up, n_paths, seed):
    rng = np.random.default_rng(seed)
    pos = np.zeros(n_paths, dtype=np.int64)
    steps = np.zeros(n_paths)
    live = np.arange(n_paths)
    while live.size:
        move = np.where(rng.random(live.size) < up, 1, -1)
        pos[live] += move
        steps[live] += 1
        live = live[np.abs(pos[live]) < N]
    return steps


def simulate_walk(
    f: Callable[[float], float], ell: float, n: int, n_paths: int = 1_000_000, seed: int = 0, state: int = 1
) -> tuple[float, float]:
    """Monte Carlo estimate ``(mean cost, standard error)`` of the walk cost."""
    N = 2**n
    delta = ell / N
    up = 1.0 / (1.0 + math.exp(-delta)) if state == 1 else 1.0 / (1.0 + math.exp(delta))
    sim = _simulate_walk_numba if _accel.HAVE_NUMBA else _simulate_walk_numpy
    steps = sim(N, up, int(n_paths), int(seed))
    cost = float(f(delta)) * steps
    return float(cost.mean()), float(cost.std(ddof=1) / math.sqrt(n_paths))


# --- grid tables ------------------------------------------------------------


@dataclass(eq=False)
class GridCostTable:
    """Costs of binary grid targets; ``values[lo, hi, p]``.

    Entries with ``lo < p < hi`` are targets.  Entries with ``p`` equal to
    ``lo`` or ``hi`` are trivial and pinned to 0; all others are ``+inf``.
    """

    grid: BeliefGrid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        n = self.grid.n
        V = np.asarray(self.values, dtype=float)
        if V.shape != (n, n, n):
            raise InvalidInput("table shape does not match grid")
        if np.any(V < 0) or np.any(np.isnan(V)):
            raise InvalidInput("table values must be nonnegative")
        V = np.where(target_mask(n), V, INF)
        V[trivial_mask(n)] = 0.0
        self.values = V

    @property
    def n(self) -> int:
        return self.grid.n

    def targets(self):
        n = self.n
        for lo in range(n):
            for hi in range(lo + 2, n):
                for p in range(lo + 1, hi):
                    yield lo, hi, p

    def rows(self):
        x = self.grid.nodes
        return [(x[lo], x[hi], x[p], self.values[lo, hi, p]) for lo, hi, p in self.targets()]

    def interior(self, min_width: float = 0.0) -> np.ndarray:
        """Mask of targets whose atoms avoid the endpoints and are at least ``min_width`` apart."""
        n = self.n
        x = self.grid.nodes
        lo, hi, p = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        m = (lo < p) & (p < hi) & (lo > 0) & (hi < n - 1)
        return m & (x[hi] - x[lo] >= min_width - 1e-12)

    def copy(self) -> "GridCostTable":
        return GridCostTable(self.grid, self.values.copy(), self.name)


def target_mask(n: int) -> np.ndarray:
    i = np.arange(n)
    lo, hi, p = i[:, None, None], i[None, :, None], i[None, None, :]
    return (lo <= p) & (p <= hi)


def trivial_mask(n: int) -> np.ndarray:
    i = np.arange(n)
    lo, hi, p = i[:, None, None], i[None, :, None], i[None, None, :]
    return ((lo == p) | (hi == p)) & (lo <= hi)


def binary_target(grid: BeliefGrid, lo: int, hi: int, p: int) -> RandomPosterior:
    x = grid.nodes
    wh = (x[p] - x[lo]) / (x[hi] - x[lo])
    return RandomPosterior(np.array([1.0 - wh, wh]), np.array([[1 - x[lo], x[lo]], [1 - x[hi], x[hi]]]))


def _spread(x, lo, hi, p):
    return (x[hi] - x[p]) * (x[p] - x[lo]) / (x[hi] - x[lo])


def table_from_cost(C: CostFunction, grid: BeliefGrid, disposal: bool = False) -> GridCostTable:
    """Evaluate ``C`` on every binary grid target.

    With ``disposal`` each target may also be reached by the least dilution of
    a wider binary posterior (same prior) that still dominates it; this lets
    costs that are finite only on three-atom posteriors enter the table.
    Only wider posteriors inside the domain of ``C`` are diluted.
    """
    n = grid.n
    V = np.full((n, n, n), INF)
    g = BeliefGrid(grid.nodes, grid.kind)
    for lo in range(n):
        for hi in range(lo + 2, n):
            for p in range(lo + 1, hi):
                V[lo, hi, p] = C(binary_target(g, lo, hi, p))
    if disposal:
        x = grid.nodes
        finite = np.isfinite(V)
        for xl in range(n):
            for yh in range(xl + 2, n):
                for p in range(xl + 1, yh):
                    if not finite[xl, yh, p]:
                        continue
                    base = binary_target(g, xl, yh, p)
                    phi = _spread(x, xl, yh, p)
                    for lo in range(xl, p):
                        for hi in range(p + 1, yh + 1):
                            beta = _spread(x, lo, hi, p) / phi
                            v = C(dilute(base, min(1.0, beta)))
                            if v < V[lo, hi, p]:
                                V[lo, hi, p] = v
    return GridCostTable(grid, V, C.name)


# --- the psi sweep ----------------------------------------------------------


@njit
def _envelope_kernel(V):
    """``E[lo, hi, a] = min_{l <= lo, h >= hi} V[l, h, a]``."""
    n = V.shape[0]
    E = V.copy()
    for a in range(n):
        for hi in range(n - 1, -1, -1):
            for lo in range(n):
                v = E[lo, hi, a]
                if lo > 0 and E[lo - 1, hi, a] < v:
                    v = E[lo - 1, hi, a]
                if hi < n - 1 and E[lo, hi + 1, a] < v:
                    v = E[lo, hi + 1, a]
                E[lo, hi, a] = v
    return E


def _envelope_numpy(V):
    E = np.minimum.accumulate(V, axis=0)
    return np.minimum.accumulate(E[:, ::-1, :], axis=1)[:, ::-1, :]


@njit
def _psi_kernel(V, E, x):
    n = x.size
    out = V.copy()
    for lo in range(n):
        for hi in range(lo + 2, n):
            for p in range(lo + 1, hi):
                best = out[lo, hi, p]
                if E[lo, hi, p] < best:
                    best = E[lo, hi, p]
                for a in range(p):
                    ma = 0.0 if a <= lo else E[lo, hi, a]
                    if ma == np.inf:
                        continue
                    for b in range(p + 1, n):
                        v1 = V[a, b, p]
                        if v1 == np.inf:
                            continue
                        mb = 0.0 if b >= hi else E[lo, hi, b]
                        if mb == np.inf:
                            continue
                        span = x[b] - x[a]
                        c = v1 + (x[b] - x[p]) / span * ma + (x[p] - x[a]) / span * mb
                        if c < best:
                            best = c
                out[lo, hi, p] = best
    return out


@dataclass
class _Weights:
    """First-round split weights ``wa[a, b, p]``, ``wb[a, b, p]`` and the split mask."""

    wa: np.ndarray
    wb: np.ndarray
    valid: np.ndarray


_WEIGHT_CACHE: dict = {}


def _weights(x: np.ndarray) -> _Weights:
    key = x.tobytes()
    if key not in _WEIGHT_CACHE:
        n = x.size
        a, b, p = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        valid = (a < p) & (p < b)
        span = np.where(valid, x[b] - x[a], 1.0)
        wa = np.where(valid, (x[b] - x[p]) / span, 1.0)
        wb = np.where(valid, (x[p] - x[a]) / span, 1.0)
        _WEIGHT_CACHE.clear()
        _WEIGHT_CACHE[key] = _Weights(wa, wb, valid)
    return _WEIGHT_CACHE[key]


def _psi_numpy(V, E, x):
    n = x.size
    W = _weights(x)
    Vs = np.where(W.valid, V, INF)
    out = V.copy()
    idx = np.arange(n)
    for lo in range(n):
        for hi in range(lo + 2, n):
            m = np.where((idx <= lo) | (idx >= hi), 0.0, E[lo, hi])
            ps = slice(lo + 1, hi)
            cand = Vs[:, :, ps] + W.wa[:, :, ps] * m[:, None, None] + W.wb[:, :, ps] * m[None, :, None]
            best = cand.min(axis=(0, 1))
            out[lo, hi, ps] = np.minimum(np.minimum(out[lo, hi, ps], E[lo, hi, ps]), best)
    return out


def psi_step(table: GridCostTable, backend: str | None = None) -> GridCostTable:
    """One round of optimal two-step decomposition with free disposal."""
    backend = backend or _accel.backend()
    V = table.values
    x = np.ascontiguousarray(table.grid.nodes, dtype=float)
    if backend == "numba":
        if not _accel.HAVE_NUMBA:
            raise InvalidInput("numba backend requested but numba is unavailable or disabled")
        E = _envelope_kernel(V)
        out = _psi_kernel(V, E, x)
    elif backend == "numpy":
        E = _envelope_numpy(V)
        out = _psi_numpy(V, E, x)
    else:
        raise InvalidInput(f"unknown backend {backend!r}")
    return GridCostTable(table.grid, out, table.name)


@dataclass
class IterationReport:
    iterations: int
    sup_change: float
    converged: bool
    final: GridCostTable
    history: list = field(default_factory=list)


def _change(old: np.ndarray, new: np.ndarray) -> tuple[float, int]:
    fin_old = np.isfinite(old)
    fin_new = np.isfinite(new)
    both = fin_old & fin_new
    sup = float(np.abs(old[both] - new[both]).max(initial=0.0))
    return sup, int(np.count_nonzero(fin_new & ~fin_old))


def phi_iterate(
    table: GridCostTable, tol: float = 1e-8, max_iters: int = 500, backend: str | None = None
) -> IterationReport:
    """Iterate :func:`psi_step` until the sup change over finite entries is below ``tol``
    and no entry newly becomes finite."""
    cur = table
    history = []
    sup = INF
    for it in range(1, max_iters + 1):
        nxt = psi_step(cur, backend)
        sup, newly = _change(cur.values, nxt.values)
        history.append({"iteration": it, "sup_change": sup, "newly_finite": newly})
        cur = nxt
        if sup < tol and newly == 0:
            return IterationReport(it, sup, True, cur, history)
    return IterationReport(max_iters, sup, False, cur, history)


# --- exhaustive oracle ------------------------------------------------------


def _dominates(atoms, target, nodes, tol=1e-12) -> bool:
    """Integrated-CDF dominance of a finite distribution over a binary target."""
    for t in nodes:
        lhs = sum(w * max(x - t, 0.0) for w, x in atoms)
        rhs = sum(w * max(x - t, 0.0) for w, x in target)
        if lhs < rhs - tol:
            return False
    return True


def phi_bruteforce_oracle(C: CostFunction, n: int = 5, grid: BeliefGrid | None = None,
                          tol: float = 1e-12, max_iters: int = 100) -> GridCostTable:
    """Exhaustive two-round decompositions on a tiny grid, iterated to a fixed point.

    First rounds are any binary grid split of the prior; each first-round atom
    either stops or runs any binary grid posterior of its own (support of the
    terminal distribution at most four atoms).  Dominance over the target is
    checked with the integrated CDF at every node.
    """
    grid = grid or BeliefGrid.uniform(n)
    n = grid.n
    if n > 7:
        raise InvalidInput("oracle is limited to grids with at most 7 nodes")
    x = [float(v) for v in grid.nodes]
    V = table_from_cost(C, grid).values.copy()

    def second_rounds(a):
        yield 0.0, [(1.0, x[a])]
        for l in range(a):
            for h in range(a + 1, n):
                if math.isfinite(V[l, h, a]):
                    wh = (x[a] - x[l]) / (x[h] - x[l])
                    yield V[l, h, a], [(1 - wh, x[l]), (wh, x[h])]

    for _ in range(max_iters):
        new = V.copy()
        for lo in range(n):
            for hi in range(lo + 2, n):
                for p in range(lo + 1, hi):
                    wt = (x[p] - x[lo]) / (x[hi] - x[lo])
                    target = [(1 - wt, x[lo]), (wt, x[hi])]
                    best = V[lo, hi, p]
                    for a in range(p):
                        for b in range(p + 1, n):
                            c1 = V[a, b, p]
                            if not math.isfinite(c1):
                                continue
                            wb = (x[p] - x[a]) / (x[b] - x[a])
                            wa = 1 - wb
                            for ca, da in second_rounds(a):
                                for cb, db in second_rounds(b):
                                    c = c1 + wa * ca + wb * cb
                                    if c >= best:
                                        continue
                                    atoms = [(wa * w, v) for w, v in da] + [(wb * w, v) for w, v in db]
                                    if _dominates(atoms, target, x):
                                        best = c
                    new[lo, hi, p] = best
        sup, newly = _change(V, new)
        V = new
        if sup <= tol and newly == 0:
            break
    return GridCostTable(grid, V, f"oracle[{C.name}]")


# --- Poisson cover ----------------------------------------------------------


def poisson_cover(sigma: Experiment) -> tuple[Experiment, float]:
    """Split each signal into a revealing residual and an uninformative common part.

    Returns ``(sigma_hat, lambda_hat)`` with ``lambda_hat = -log sum_s min_t sigma_t(s)``;
    ``sigma_hat`` is equivalent to a Poisson dilution with that intensity.
    """
    if sigma.n_states != 2:
        raise InvalidInput("poisson cover needs exactly two states")
    K = sigma.channel
    common = K.min(axis=0)
    resid = K - common
    total = float(common.sum())
    lam = INF if total <= 0 else -math.log(total)
    labels = tuple(f"{s}'" for s in sigma.signals) + tuple(f"{s}''" for s in sigma.signals)
    return Experiment(np.hstack([resid, np.tile(common, (2, 1))]), labels, sigma.states), lam


# --- pipeline ---------------------------------------------------------------


def tv_table(grid: BeliefGrid) -> GridCostTable:
    return table_from_cost(tv_cost(), grid)


def wald_table(grid: BeliefGrid, scale: float = 1.0) -> GridCostTable:
    t = table_from_cost(wald_cost(), grid)
    return GridCostTable(grid, scale * t.values, f"{scale:g}*wald")


def table_curvature(table: GridCostTable, i: int) -> float:
    """Scalar curvature ``c(x_i)`` read off the symmetric-in-index targets around node ``i``.

    Uses spreads of one and two grid steps with Richardson extrapolation.
    """
    x = table.grid.nodes
    est = []
    for k in (1, 2):
        V = table.values[i - k, i + k, i]
        wh = (x[i] - x[i - k]) / (x[i + k] - x[i - k])
        var = (1 - wh) * (x[i - k] - x[i]) ** 2 + wh * (x[i + k] - x[i]) ** 2
        est.append(2.0 * V / var)
    return float((4 * est[0] - est[1]) / 3)


def compute_indirect(C: CostFunction, grid_n: int = 41, tol: float = 1e-8, seed: int = 0) -> dict:
    """Decide whether the indirect cost of ``C`` is a posterior-separable cost.

    Estimates the kernel, integrates it to a potential, and checks whether
    ``C`` dominates that potential's cost.  Kinked costs are handed to the
    grid iteration.
    """
    if C.n_states not in (None, 2):
        raise InvalidInput("pipeline handles two-state costs")
    p0 = np.array([0.5, 0.5])
    out: dict = {"cost": C.name}
    try:
        est = estimate_kernel(C, p0)
    except NotLocallyQuadratic as exc:
        grid = BeliefGrid.uniform(grid_n)
        disposal = C.meta.get("kind") == "poisson_direct"
        rep = phi_iterate(table_from_cost(C, grid, disposal=disposal), tol=tol)
        ref = tv_table(grid)
        mask = target_mask(grid.n) & np.isfinite(ref.values)
        gap = float(np.abs(rep.final.values[mask] - ref.values[mask]).max())
        out.update(verdict="non-LQ", reason=str(exc), kernel=None,
                   kinked=isinstance(exc, KinkedCost),
                   grid={"n": grid_n, "iterations": rep.iterations, "converged": rep.converged,
                         "max_gap_to_tv": gap})
        return out
    out["kernel"] = est.kernel.tolist()
    G = integrate_potential_binary(C)
    H = G.as_potential()
    flie = flie_check(C, H, seed=seed, tol=1e-6)
    out["flie"] = flie.to_dict()
    xs = np.linspace(0.05, 0.95, 19)
    out["potential"] = {"x": xs.tolist(), "G": [G.value(v) for v in xs]}
    if flie.passed:
        out["verdict"] = "UPS"
        out["notes"] = "indirect cost equals the posterior-separable cost of the integrated potential"
    else:
        out["verdict"] = "kernel-invariant"
        out["notes"] = ("indirect cost shares the estimated kernel; "
                        "use the grid iteration for values")
    return out


def poisson_cover_check(sigma: Experiment) -> dict:
    hat, lam = poisson_cover(sigma)
    tv = tv_cost().on_experiment(sigma, np.array([0.5, 0.5]))
    return {"lambda_hat": lam, "tv": tv, "one_minus_exp": 1.0 - math.exp(-lam) if math.isfinite(lam) else 1.0,
            "dominates": blackwell_geq(hat, sigma)}
