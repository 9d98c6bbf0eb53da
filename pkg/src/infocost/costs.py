"""Catalog of information cost functions.

Every cost is a :class:`CostFunction`: an evaluator on random posteriors that
returns ``math.inf`` outside its domain and ``0`` on uninformative inputs.
Optional metadata records a potential (uniformly posterior separable costs),
a divergence (posterior separable costs) and an experiment form ``(sigma, p)
-> value``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .experiments import Experiment, bayes_map
from .posteriors import RandomPosterior
from .simplex import InvalidInput, normalize_kernel

INF = math.inf
BERNOULLI_TOL = 1e-7
POISSON_TOL = 1e-9


# --- basic pieces ---------------------------------------------------------


def kl(mu, nu) -> float:
    """Kullback-Leibler divergence of two distributions on the same finite set."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise InvalidInput("distributions live on different signal sets")
    pos = mu > 0
    if np.any(nu[pos] <= 0):
        return INF
    return float(max(0.0, np.sum(mu[pos] * np.log(mu[pos] / nu[pos]))))


def kl_matrix(channel: np.ndarray) -> np.ndarray:
    """``K[a, b] = kl(row a, row b)``."""
    t = channel.shape[0]
    return np.array([[kl(channel[a], channel[b]) if a != b else 0.0 for b in range(t)] for a in range(t)])


def _weighted_kl(coef: np.ndarray, channel: np.ndarray) -> float:
    total = 0.0
    for a, b in zip(*np.nonzero(coef)):
        if a == b:
            continue
        v = kl(channel[a], channel[b])
        if math.isinf(v):
            return INF
        total += coef[a, b] * v
    return total


@dataclass(frozen=True)
class Potential:
    """Convex potential ``H`` with optional analytic gradient and Hessian."""

    H: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "H"

    def __call__(self, q) -> float:
        return self.H(np.asarray(q, dtype=float))

    def scaled(self, c: float) -> "Potential":
        return Potential(
            lambda q: c * self.H(q),
            None if self.grad is None else (lambda q: c * self.grad(q)),
            None if self.hess is None else (lambda q: c * self.hess(q)),
            f"{c:g}*{self.name}",
        )


@dataclass(frozen=True)
class Divergence:
    """``D(q | p)``; zero on the diagonal."""

    D: Callable[[np.ndarray, np.ndarray], float]
    name: str = "D"

    def __call__(self, q, p) -> float:
        return self.D(np.asarray(q, dtype=float), np.asarray(p, dtype=float))


@dataclass(frozen=True, eq=False)
class CostFunction:
    name: str
    evaluator: Callable[[RandomPosterior], float]
    experiment_form: Callable[[Experiment, np.ndarray], float] | None = None
    potential: Potential | None = None
    divergence: Divergence | None = None
    n_states: int | None = None
    closed_form: bool = True
    probe: Callable | None = None
    meta: dict = field(default_factory=dict)

    def _check_dim(self, d: int):
        if self.n_states is not None and d != self.n_states:
            raise InvalidInput(f"{self.name} needs exactly {self.n_states} states, got {d}")

    def __call__(self, pi: RandomPosterior) -> float:
        self._check_dim(pi.dim)
        if pi.is_trivial():
            return 0.0
        return float(self.evaluator(pi))

    def on_experiment(self, sigma: Experiment, p) -> float:
        """Cost of running ``sigma`` at prior ``p``."""
        p = np.asarray(p, dtype=float)
        self._check_dim(p.size)
        if self.experiment_form is not None:
            return float(self.experiment_form(sigma, p))
        return self(bayes_map(sigma, p))

    def on_experiment_via_posterior(self, sigma: Experiment, p) -> float:
        return self(bayes_map(sigma, p))

    @property
    def tolerance(self) -> float:
        return 1e-9 if self.closed_form else 1e-6


def canonical_experiment(pi: RandomPosterior) -> Experiment:
    """Experiment with one signal per atom that induces ``pi`` at its prior.

    Rows for states outside the prior's support are undefined and set to the
    signal marginal.
    """
    p = pi.prior
    rows = np.empty((pi.dim, pi.size))
    for th in range(pi.dim):
        if p[th] > 0:
            rows[th] = pi.weights * pi.beliefs[:, th] / p[th]
        else:
            rows[th] = pi.weights
    return Experiment(rows / rows.sum(axis=1, keepdims=True))


# --- uniformly posterior separable costs ----------------------------------


def ups_cost(H: Potential, name: str | None = None, interior_only: bool = False, **kw) -> CostFunction:
    """``E_pi[H(q)] - H(p_pi)``; ``+inf`` wherever ``H`` is infinite."""

    def evaluate(pi: RandomPosterior) -> float:
        if interior_only and np.any(pi.beliefs <= 0):
            return INF
        vals = np.array([H(q) for q in pi.beliefs])
        hp = H(pi.prior)
        if np.any(np.isinf(vals)) or math.isinf(hp):
            return INF
        return float(max(0.0, pi.weights @ vals - hp))

    return CostFunction(name or f"ups[{H.name}]", evaluate, potential=H,
                        divergence=_bregman(H), **kw)


def _bregman(H: Potential) -> Divergence | None:
    if H.grad is None:
        return None

    def D(q, p):
        hq, hp = H(q), H(p)
        if math.isinf(hq) or math.isinf(hp):
            return INF
        return float(max(0.0, hq - hp - H.grad(p) @ (q - p)))

    return Divergence(D, f"bregman[{H.name}]")


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def entropy_potential() -> Potential:
    def grad(p):
        with np.errstate(divide="ignore"):
            return np.log(p) + 1.0

    return Potential(
        lambda p: float(_xlogx(p).sum()),
        grad,
        lambda p: np.diag(1.0 / p),
        "H_MI",
    )


def _clean_coef(coef, name: str) -> np.ndarray:
    c = np.array(coef, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise InvalidInput(f"{name} must be finite and nonnegative")
    np.fill_diagonal(c, 0.0)
    return c


def ti_potential(gamma) -> Potential:
    """``sum_t p(t) sum_t' gamma[t, t'] log(p(t) / p(t'))``."""
    g = _clean_coef(gamma, "gamma")

    def H(p):
        total = 0.0
        for a, b in zip(*np.nonzero(g)):
            if p[a] == 0:
                continue
            if p[b] == 0:
                return INF
            total += g[a, b] * p[a] * math.log(p[a] / p[b])
        return total

    def grad(p):
        lp = np.log(p)
        out = (g * (lp[:, None] - lp[None, :])).sum(axis=1) + g.sum(axis=1)
        return out - (g * p[:, None]).sum(axis=0) / p

    def hess(p):
        out = -(g / p[None, :] + g.T / p[:, None])
        diag = g.sum(axis=1) / p + (g * p[:, None]).sum(axis=0) / p**2
        np.fill_diagonal(out, diag)
        return out

    return Potential(H, grad, hess, "H_TI")


def mi_cost() -> CostFunction:
    """Mutual information; finite on the whole simplex."""
    H = entropy_potential()

    def exp_form(sigma, p):
        m = p @ sigma.channel
        return sum(p[t] * kl(sigma.channel[t], m) for t in range(p.size) if p[t] > 0)

    return ups_cost(H, "mi", experiment_form=exp_form, meta={"kind": "mi"})


def ti_cost(gamma) -> CostFunction:
    g = _clean_coef(gamma, "gamma")
    H = ti_potential(g)

    def exp_form(sigma, p):
        return _weighted_kl(g * p[:, None], sigma.channel)

    return ups_cost(H, "ti", experiment_form=exp_form, meta={"kind": "ti", "gamma": g.tolist()})


def wald_potential() -> Potential:
    return ti_potential([[0.0, 1.0], [1.0, 0.0]])


def wald_cost() -> CostFunction:
    """Binary symmetric-KL cost ``p0 KL(s0|s1) + p1 KL(s1|s0)``."""
    g = np.array([[0.0, 1.0], [1.0, 0.0]])
    H = ti_potential(g)
    H = Potential(H.H, H.grad, H.hess, "H_Wald")

    def exp_form(sigma, p):
        return _weighted_kl(g * p[:, None], sigma.channel)

    def pie_form(sigma, p):
        K = sigma.channel
        return max(kl(K[0], K[1]), kl(K[1], K[0]))

    return ups_cost(H, "wald", experiment_form=exp_form, n_states=2,
                    meta={"kind": "wald", "pie": pie_form})


def fisher_gamma(points: Sequence[float]) -> np.ndarray:
    """Adjacent-neighbour coefficients ``1 / (t - t')^2`` on a sorted state grid."""
    x = np.asarray(points, dtype=float)
    g = np.zeros((x.size, x.size))
    for i in range(x.size - 1):
        h2 = (x[i + 1] - x[i]) ** 2
        g[i, i + 1] = g[i + 1, i] = 1.0 / h2
    return g


def experiment_ti(gamma) -> Callable[[Experiment, np.ndarray], float]:
    g = _clean_coef(gamma, "gamma")

    def gamma_form(sigma, p):
        return _weighted_kl(g * np.asarray(p, dtype=float)[:, None], sigma.channel)

    return gamma_form


# --- log-likelihood ratio cost --------------------------------------------


def llr_divergence(beta) -> Divergence:
    """Bregman divergence of ``q -> sum_t q(t) sum_t' beta/p(t) log(q(t)/q(t'))``."""
    b = _clean_coef(beta, "beta")

    def D(q, p):
        if np.any(p <= 0):
            return INF
        F = ti_potential(b / p[:, None])
        fq = F(q)
        if math.isinf(fq):
            return INF
        return float(max(0.0, fq - F.grad(p) @ q))

    return Divergence(D, "D_beta")


def llr_cost(beta) -> CostFunction:
    b = _clean_coef(beta, "beta")

    def exp_form(sigma, p):
        return _weighted_kl(b, sigma.channel)

    def evaluate(pi):
        if np.any(pi.prior <= 0):
            return INF
        return exp_form(canonical_experiment(pi), pi.prior)

    return CostFunction("llr", evaluate, experiment_form=exp_form,
                        divergence=llr_divergence(b), meta={"kind": "llr", "beta": b.tolist()})


# --- likelihood-ratio and total-variation costs ---------------------------


def d_mlr(q, p) -> float:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    s = p > 0
    return float(max(0.0, 1.0 - np.min(q[s] / p[s])))


def experiment_mlr() -> Callable[[Experiment, np.ndarray], float]:
    def mlr_form(sigma, p=None):
        return float(max(0.0, 1.0 - sigma.channel.min(axis=0).sum()))

    return mlr_form


def _ps_cost(name: str, D: Divergence, **kw) -> CostFunction:
    def evaluate(pi):
        vals = [D(q, pi.prior) for q in pi.beliefs]
        return float(pi.weights @ np.array(vals))

    return CostFunction(name, evaluate, divergence=D, **kw)


def mlr_cost() -> CostFunction:
    def exp_form(sigma, p):
        s = p > 0
        return float(max(0.0, 1.0 - sigma.channel[s].min(axis=0).sum()))

    return _ps_cost("mlr", Divergence(d_mlr, "D_MLR"), experiment_form=exp_form,
                    meta={"kind": "mlr"})


def tv_cost() -> CostFunction:
    def exp_form(sigma, p):
        K = sigma.channel
        return 0.5 * float(np.abs(K[0] - K[1]).sum())

    return _ps_cost("tv", Divergence(d_mlr, "D_TV"), experiment_form=exp_form,
                    n_states=2, meta={"kind": "tv"})


# --- restricted direct costs ----------------------------------------------


@dataclass(frozen=True)
class ScalarF:
    """Scalar technology ``f`` with ``f(0) = f'(0) = 0`` and known ``f''(0)``."""

    f: Callable[[float], float]
    fpp0: float
    name: str = "f"

    def __call__(self, ell: float) -> float:
        return float(self.f(ell))


def named_f(spec) -> ScalarF:
    """``"l2"``, ``"l2_over_1pl"`` or a list of polynomial coefficients ``[c2, c3, ...]``."""
    if spec == "l2":
        return ScalarF(lambda l: l * l, 2.0, "l2")
    if spec == "l2_over_1pl":
        return ScalarF(lambda l: l * l / (1.0 + l), 2.0, "l2_over_1pl")
    if isinstance(spec, (list, tuple)) and len(spec) > 0:
        c = [float(v) for v in spec]
        if c[0] <= 0:
            raise InvalidInput("leading quadratic coefficient must be positive")
        return ScalarF(lambda l: sum(ck * l ** (k + 2) for k, ck in enumerate(c)), 2.0 * c[0],
                       "poly" + str(c))
    raise InvalidInput(f"unknown scalar function {spec!r}")


def _logit(x):
    return np.log(x) - np.log1p(-x)


def bernoulli_ell(pi: RandomPosterior, tol: float = BERNOULLI_TOL) -> float | None:
    """``ell`` if ``pi`` is a Bernoulli image at an interior prior, else ``None``."""
    if pi.dim != 2 or pi.size != 2:
        return None
    x = np.sort(pi.beliefs[:, 1])
    xp = pi.prior[1]
    if x[0] <= 0 or x[1] >= 1 or not 0 < xp < 1:
        return None
    ua, ub, up = _logit(x[0]), _logit(x[1]), _logit(xp)
    if abs((ub - up) - (up - ua)) > tol:
        return None
    return 0.5 * float(ub - ua)


def bernoulli_direct(f: ScalarF) -> CostFunction:
    """``f(ell)`` on Bernoulli images, ``+inf`` on every other informative input."""

    def evaluate(pi):
        ell = bernoulli_ell(pi)
        return INF if ell is None else f(ell)

    def probe(p, y, t):
        # log-odds symmetric pair with first-order displacement t*y
        p1 = p[1]
        ell = t * abs(y[1]) / (p1 * (1.0 - p1))
        u = _logit(p1)
        lo, hi = 1.0 / (1.0 + np.exp(-(u - ell))), 1.0 / (1.0 + np.exp(-(u + ell)))
        w_hi = (p1 - lo) / (hi - lo)
        return RandomPosterior(np.array([1 - w_hi, w_hi]), np.array([[1 - lo, lo], [1 - hi, hi]]))

    return CostFunction(f"bernoulli_direct[{f.name}]", evaluate, n_states=2, probe=probe,
                        meta={"kind": "bernoulli_direct", "f": f})


def poisson_lambda(pi: RandomPosterior, tol: float = POISSON_TOL) -> float | None:
    """Revealing probability ``1 - e^-lambda`` if ``pi`` is a Poisson-dilution image."""
    if pi.dim != 2:
        return None
    p = pi.prior
    if np.any(p <= 0):
        return None
    mass = {0: 0.0, 1: 0.0}
    for w, q in pi.atoms():
        if q[0] >= 1.0 - tol:
            mass[0] += w
        elif q[1] >= 1.0 - tol:
            mass[1] += w
        elif np.abs(q - p).max() > tol:
            return None
    r0, r1 = mass[0] / p[0], mass[1] / p[1]
    if abs(r0 - r1) > tol:
        return None
    return 0.5 * (r0 + r1)


def poisson_direct() -> CostFunction:
    def evaluate(pi):
        r = poisson_lambda(pi)
        return INF if r is None else float(min(1.0, r))

    return CostFunction("poisson_direct", evaluate, n_states=2, meta={"kind": "poisson_direct"})


# --- envelopes and combinations -------------------------------------------


def pie(C: CostFunction, n_priors: int = 200, seed: int = 0) -> CostFunction:
    """Prior-invariant envelope: max of ``C(h_B(sigma, p'))`` over sampled ``p'``.

    A closed form registered in ``C.meta["pie"]`` replaces sampling.
    """
    closed = C.meta.get("pie")

    def exp_form(sigma, p):
        if closed is not None:
            return closed(sigma, p)
        s = np.flatnonzero(p > 0)
        rng = np.random.default_rng(seed)
        best = C.on_experiment(sigma, p)
        for _ in range(n_priors):
            pp = np.zeros_like(p)
            pp[s] = rng.dirichlet(np.ones(s.size))
            best = max(best, C.on_experiment(sigma, pp))
        return best

    def evaluate(pi):
        if np.any(pi.prior <= 0):
            return INF
        return exp_form(canonical_experiment(pi), pi.prior)

    return CostFunction(f"pie[{C.name}]", evaluate, experiment_form=exp_form, n_states=C.n_states,
                        closed_form=closed is not None, meta={"kind": "pie", "base": C})


@dataclass(frozen=True)
class Combiner:
    g: Callable[[np.ndarray], float]
    grad0: np.ndarray
    name: str


def named_combiner(name: str, arity: int, weights=None) -> Combiner:
    if name == "sum":
        return Combiner(lambda x: float(np.sum(x)), np.ones(arity), "sum")
    if name == "sum_plus_product":
        return Combiner(lambda x: float(np.sum(x) + np.prod(x)), np.ones(arity), "sum_plus_product")
    if name == "weighted":
        w = np.asarray(weights, dtype=float)
        if w.size != arity or np.any(w < 0):
            raise InvalidInput("weighted combiner needs one nonnegative weight per cost")
        return Combiner(lambda x: float(w @ x), w, "weighted")
    raise InvalidInput(f"unknown combiner {name!r}")


def combine(g: Combiner, costs: Sequence[CostFunction]) -> CostFunction:
    """Pointwise ``g(C1(pi), ..., Cn(pi))``."""
    costs = tuple(costs)
    if len(costs) != np.asarray(g.grad0).size:
        raise InvalidInput("combiner arity does not match number of costs")
    dims = {c.n_states for c in costs} - {None}
    if len(dims) > 1:
        raise InvalidInput("combined costs live on different state sets")

    def evaluate(pi):
        vals = np.array([c(pi) for c in costs])
        if np.any(np.isinf(vals)):
            return INF
        return g.g(vals)

    return CostFunction(
        f"{g.name}({', '.join(c.name for c in costs)})",
        evaluate,
        n_states=next(iter(dims)) if dims else None,
        closed_form=all(c.closed_form for c in costs),
        meta={"kind": "combine", "grad0": np.asarray(g.grad0, dtype=float), "parts": costs},
    )


def combined_hessian(C: CostFunction, p) -> np.ndarray | None:
    """Kernel rule for combinations: ``sum_i d_i g(0) Hess H_i(p)``."""
    parts = C.meta.get("parts")
    if parts is None:
        return None
    total = 0.0
    for gi, c in zip(C.meta["grad0"], parts):
        if c.potential is None or c.potential.hess is None:
            return None
        total = total + gi * normalize_kernel(c.potential.hess(np.asarray(p, float)), p)
    return total
