import math

import numpy as np
import pytest

from infocost.costs import (
    INF,
    bernoulli_direct,
    bernoulli_ell,
    combine,
    entropy_potential,
    experiment_mlr,
    experiment_ti,
    fisher_gamma,
    kl,
    llr_cost,
    mi_cost,
    mlr_cost,
    named_combiner,
    named_f,
    pie,
    poisson_direct,
    ti_cost,
    tv_cost,
    ups_cost,
    wald_cost,
    d_mlr,
    Potential,
)
from infocost.experiments import (
    Experiment,
    bayes_map,
    bernoulli,
    full_revelation,
    poisson_dilution,
    random_experiment,
    uninformative,
)
from infocost.kernels import estimate_kernel
from infocost.posteriors import RandomPosterior, dilute, random_posterior, random_mps_pair
from infocost.simplex import InvalidInput, matrix_seminorm

TANH_HALF = math.tanh(0.5)
ASYM = Experiment(np.array([[0.7, 0.3], [0.2, 0.8]]))
U2 = np.array([0.5, 0.5])


def full_info(p):
    p = np.asarray(p, dtype=float)
    return RandomPosterior(p, np.eye(p.size))


class TestKl:
    def test_self(self):
        assert kl([0.3, 0.7], [0.3, 0.7]) == 0

    def test_bernoulli(self):
        K = bernoulli(1.0).channel
        assert kl(K[1], K[0]) == pytest.approx(0.462117, abs=1e-6)
        assert kl(K[1], K[0]) == pytest.approx(TANH_HALF, abs=1e-15)

    def test_point_vs_uniform(self):
        assert kl([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_infinite(self):
        assert kl([0.5, 0.5], [1.0, 0.0]) == INF


class TestUps:
    def test_point_mass_zero(self):
        assert ups_cost(entropy_potential())(RandomPosterior.point([0.2, 0.8])) == 0

    def test_full_info_entropy(self):
        assert ups_cost(entropy_potential())(full_info(U2)) == pytest.approx(math.log(2))

    def test_affine_potential_zero(self, rng):
        a = np.array([0.3, -1.2, 2.0])
        C = ups_cost(Potential(lambda q: float(a @ q) + 1.0, None, None, "affine"))
        for _ in range(20):
            assert C(random_posterior(rng, 3)) == pytest.approx(0.0, abs=1e-12)


class TestMi:
    def test_uninformative(self):
        assert mi_cost().on_experiment(uninformative(2), U2) == 0

    def test_bernoulli_one(self):
        # direct evaluation of E[H(q)] - H(p)
        x = math.e / (1 + math.e)
        expected = math.log(2) + x * math.log(x) + (1 - x) * math.log(1 - x)
        C = mi_cost()
        assert C.on_experiment(bernoulli(1.0), U2) == pytest.approx(expected, abs=1e-15)
        assert C(bayes_map(bernoulli(1.0), U2)) == pytest.approx(0.110944, abs=1e-6)

    def test_monotone_on_mps_pairs(self, rng):
        C = mi_cost()
        for _ in range(1000):
            lo, hi = random_mps_pair(rng, int(rng.integers(2, 4)))
            assert C(lo) <= C(hi) + 1e-9

    def test_finite_on_boundary(self):
        assert mi_cost()(full_info([0.3, 0.7])) == pytest.approx(-0.3 * math.log(0.3) - 0.7 * math.log(0.7))


class TestTiWaldLlr:
    def test_ti_zero(self, rng):
        assert ti_cost(np.zeros((3, 3)))(random_posterior(rng, 3)) == 0

    def test_ti_half_is_wald(self, rng):
        ti, wald = ti_cost([[0, 1], [1, 0]]), wald_cost()
        for _ in range(100):
            s = random_experiment(rng, 2)
            p = rng.dirichlet([1, 1])
            assert ti.on_experiment(s, p) == pytest.approx(wald.on_experiment(s, p), abs=1e-12)

    def test_ti_forms_agree(self, rng):
        g = rng.uniform(0, 2, size=(3, 3))
        C = ti_cost(g)
        for _ in range(200):
            s = random_experiment(rng, 3)
            p = rng.dirichlet(np.ones(3))
            assert C.on_experiment(s, p) == pytest.approx(C.on_experiment_via_posterior(s, p), abs=1e-10)

    def test_fisher_grid(self):
        theta = np.linspace(0.0, 1.0, 5)
        h = theta[1] - theta[0]
        g = fisher_gamma(theta)
        p = np.full(5, 0.2)
        for width, prev in ((2.0, None), (4.0, None)):
            s = np.linspace(-3, 3, 25)
            logits = -((s[None, :] - theta[:, None] / width) ** 2)
            K = np.exp(logits)
            K /= K.sum(axis=1, keepdims=True)
            ti = experiment_ti(g)(Experiment(K), p)
            fi = 0.0
            for i in range(5):
                for j in (i - 1, i + 1):
                    if 0 <= j < 5:
                        fi += p[i] * 0.5 * np.sum((K[j] - K[i]) ** 2 / K[i]) / h**2
            assert ti == pytest.approx(fi, rel=0.05)

    def test_experiment_ti_full_support(self, rng):
        g = rng.uniform(0, 1, size=(3, 3))
        s = random_experiment(rng, 3)
        p = rng.dirichlet(np.ones(3))
        assert experiment_ti(g)(s, p) == pytest.approx(ti_cost(g).on_experiment(s, p))

    def test_llr_zero_and_bernoulli(self):
        assert llr_cost(np.zeros((2, 2))).on_experiment(bernoulli(1.0), U2) == 0
        assert llr_cost(np.ones((2, 2))).on_experiment(bernoulli(1.0), U2) == pytest.approx(0.924234, abs=1e-6)

    def test_llr_prior_free(self, rng):
        C = llr_cost(np.ones((2, 2)))
        s = random_experiment(rng, 2)
        vals = [C.on_experiment(s, rng.dirichlet([1, 1])) for _ in range(10)]
        assert np.ptp(vals) == 0

    def test_wald_bernoulli_any_prior(self, rng):
        for _ in range(10):
            p = rng.dirichlet([1, 1])
            assert wald_cost().on_experiment(bernoulli(1.0), p) == pytest.approx(0.462117, abs=1e-6)
            assert wald_cost()(bayes_map(bernoulli(1.0), p)) == pytest.approx(TANH_HALF, abs=1e-12)

    def test_wald_asymmetric(self):
        a, b = np.array([0.7, 0.3]), np.array([0.2, 0.8])
        assert wald_cost().on_experiment(ASYM, U2) == pytest.approx(0.5 * kl(a, b) + 0.5 * kl(b, a))

    def test_wald_point_mass(self):
        assert wald_cost()(RandomPosterior.point([0.4, 0.6])) == 0

    def test_wald_boundary_infinite(self):
        assert wald_cost()(full_info(U2)) == INF

    def test_wald_needs_two_states(self, rng):
        with pytest.raises(InvalidInput):
            wald_cost()(random_posterior(rng, 3))


class TestMlrTv:
    def test_mlr(self):
        assert mlr_cost()(RandomPosterior.point([0.4, 0.6])) == 0
        assert mlr_cost()(full_info(U2)) == pytest.approx(1.0)
        assert d_mlr([0.8, 0.2], [0.5, 0.5]) == pytest.approx(0.6)

    def test_mlr_forms_agree(self, rng):
        C = mlr_cost()
        for _ in range(200):
            s = random_experiment(rng, 3)
            p = rng.dirichlet(np.ones(3))
            assert C.on_experiment(s, p) == pytest.approx(C.on_experiment_via_posterior(s, p), abs=1e-10)

    def test_experiment_mlr_prior_free(self, rng):
        s = random_experiment(rng, 3)
        f = experiment_mlr()
        assert len({f(s, rng.dirichlet(np.ones(3))) for _ in range(5)}) == 1
        assert f(uninformative(3), np.full(3, 1 / 3)) == 0
        assert experiment_ti(np.ones((3, 3)))(uninformative(3), np.full(3, 1 / 3)) == 0

    def test_tv(self):
        assert tv_cost().on_experiment(uninformative(2), U2) == 0
        assert tv_cost().on_experiment(ASYM, U2) == pytest.approx(0.5)
        for lam in (0.1, math.log(2), 3.0):
            assert tv_cost().on_experiment(poisson_dilution(lam), U2) == pytest.approx(1 - math.exp(-lam))

    def test_tv_identities(self, rng):
        for _ in range(300):
            s = random_experiment(rng, 2)
            p = rng.dirichlet([1, 1])
            v = tv_cost().on_experiment(s, p)
            assert v == pytest.approx(1 - s.channel.min(axis=0).sum(), abs=1e-12)
            assert v == pytest.approx(tv_cost().on_experiment_via_posterior(s, p), abs=1e-10)
            assert v == pytest.approx(mlr_cost().on_experiment(s, p), abs=1e-12)


class TestDirect:
    def test_bernoulli_direct(self):
        C = bernoulli_direct(named_f("l2"))
        assert C(RandomPosterior.point([0.3, 0.7])) == 0
        assert C(bayes_map(bernoulli(1.0), U2)) == pytest.approx(1.0)
        assert C(bayes_map(bernoulli(0.6), [0.2, 0.8])) == pytest.approx(0.36)
        assert C(bayes_map(ASYM, U2)) == INF

    def test_bernoulli_ell_inversion(self, rng):
        for _ in range(50):
            ell = rng.uniform(0.01, 5)
            p = rng.dirichlet([1, 1])
            assert bernoulli_ell(bayes_map(bernoulli(ell), p)) == pytest.approx(ell, rel=1e-9)

    def test_poisson_direct(self):
        C = poisson_direct()
        assert C(RandomPosterior.point([0.3, 0.7])) == 0
        assert C(bayes_map(poisson_dilution(math.log(2)), [0.3, 0.7])) == pytest.approx(0.5)
        assert C(bayes_map(bernoulli(1.0), U2)) == INF

    def test_named_f(self):
        assert named_f("l2_over_1pl")(1.0) == pytest.approx(0.5)
        assert named_f([1.0, 0.5])(2.0) == pytest.approx(8.0)
        with pytest.raises(InvalidInput):
            named_f("cubic")


class TestPie:
    def test_prior_invariant_unchanged(self, rng):
        C = llr_cost(np.ones((2, 2)))
        P = pie(C, n_priors=20)
        for _ in range(10):
            s = random_experiment(rng, 2)
            p = rng.dirichlet([1, 1])
            assert P.on_experiment(s, p) == pytest.approx(C.on_experiment(s, p), abs=1e-12)

    def test_wald_closed_form(self):
        P = pie(wald_cost())
        assert P.on_experiment(bernoulli(1.0), U2) == pytest.approx(0.462117, abs=1e-6)
        a, b = np.array([0.7, 0.3]), np.array([0.2, 0.8])
        assert P.on_experiment(ASYM, U2) == pytest.approx(max(kl(a, b), kl(b, a)))

    def test_sampled_envelope_dominates(self, rng):
        C = mi_cost()
        P = pie(C, n_priors=50)
        s = random_experiment(rng, 2)
        assert P.on_experiment(s, U2) >= C.on_experiment(s, U2)


class TestCombine:
    def test_identity(self, rng):
        C = combine(named_combiner("sum", 1), [mi_cost()])
        pi = random_posterior(rng, 3)
        assert C(pi) == pytest.approx(mi_cost()(pi))

    def test_sum_of_copies(self, rng):
        C = combine(named_combiner("sum", 2), [mi_cost(), mi_cost()])
        pi = random_posterior(rng, 3)
        assert C(pi) == pytest.approx(2 * mi_cost()(pi))

    def test_cross_term_kernel(self):
        C = combine(named_combiner("sum_plus_product", 2), [mi_cost(), mi_cost()])
        p = np.array([0.2, 0.3, 0.5])
        k = estimate_kernel(C, p).kernel
        ref = 2 * (np.diag(1 / p) - np.ones((3, 3)))
        assert matrix_seminorm(k - ref) / matrix_seminorm(ref) < 1e-3

    def test_arity(self):
        with pytest.raises(InvalidInput):
            combine(named_combiner("sum", 3), [mi_cost()])


def test_point_mass_costs_zero(rng):
    p = rng.dirichlet([1, 1])
    pt = RandomPosterior.point(p)
    for C in (mi_cost(), wald_cost(), mlr_cost(), tv_cost(), llr_cost(np.ones((2, 2))),
              ti_cost(np.ones((2, 2))), bernoulli_direct(named_f("l2")), poisson_direct()):
        assert C(pt) == 0


def test_dilution_scales_cost(rng):
    pi = random_posterior(rng, 2)
    for C in (mi_cost(), wald_cost(), mlr_cost()):
        assert C(dilute(pi, 0.4)) == pytest.approx(0.4 * C(pi), abs=1e-12)
