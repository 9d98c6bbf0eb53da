import numpy as np
import pytest

from infocost.posteriors import (
    RandomPosterior,
    TwoStepStrategy,
    dilute,
    mixture,
    mps_geq,
    mps_geq_binary,
    mps_geq_lp,
    prior_of,
    random_mps_pair,
    random_posterior,
    random_strategy,
    strategy_first_round,
    strategy_mean,
    variance,
)
from infocost.simplex import InvalidInput


def binary(*pairs):
    """Atoms given as ``(weight, prob of state 1)``."""
    return RandomPosterior.from_atoms([(w, [1 - x, x]) for w, x in pairs])


FULL = binary((0.5, 0.0), (0.5, 1.0))


class TestConstruction:
    def test_weights_must_sum(self):
        with pytest.raises(InvalidInput):
            RandomPosterior(np.array([0.5, 0.6]), np.eye(2))

    def test_merges_duplicates(self):
        pi = RandomPosterior(np.array([0.25, 0.25, 0.5]), np.array([[0.3, 0.7], [0.3, 0.7 + 0], [0.9, 0.1]]))
        assert pi.size == 2
        assert pi.weights[0] == pytest.approx(0.5)

    def test_immutable(self):
        with pytest.raises(ValueError):
            FULL.weights[0] = 1.0


class TestPrior:
    def test_point(self):
        assert np.allclose(prior_of(RandomPosterior.point([0.2, 0.8])), [0.2, 0.8])

    def test_symmetric(self):
        assert np.allclose(prior_of(FULL), [0.5, 0.5])

    def test_arithmetic(self):
        pi = RandomPosterior.from_atoms([(0.25, [0.9, 0.1]), (0.75, [0.1, 0.9])])
        assert np.allclose(pi.prior, [0.3, 0.7])


class TestVarianceAndDilution:
    def test_variance(self):
        assert variance(RandomPosterior.point([0.3, 0.7])) == 0
        assert variance(FULL) == pytest.approx(0.5)

    def test_variance_scales(self, rng):
        pi = random_posterior(rng, 3)
        assert variance(dilute(pi, 0.3)) == pytest.approx(0.3 * variance(pi))

    def test_dilute_endpoints(self):
        assert dilute(FULL, 1.0) is FULL
        assert dilute(FULL, 0.0).is_trivial()

    def test_dilute_half(self):
        atoms = {round(q[1], 6): w for w, q in dilute(FULL, 0.5).atoms()}
        assert atoms == pytest.approx({0.0: 0.25, 1.0: 0.25, 0.5: 0.5})

    def test_dilute_range(self):
        with pytest.raises(InvalidInput):
            dilute(FULL, 1.5)


class TestMps:
    def test_dominates_point(self, rng):
        pi = random_posterior(rng, 3)
        assert mps_geq(pi, RandomPosterior.point(pi.prior))

    def test_full_info_dominates(self, rng):
        for _ in range(20):
            pi = random_posterior(rng, 3)
            full = RandomPosterior(pi.prior, np.eye(3))
            assert mps_geq(full, pi)

    def test_spread_example(self):
        hi = binary((0.5, 0.2), (0.5, 0.8))
        lo = binary((0.5, 0.4), (0.5, 0.6))
        assert mps_geq(hi, lo) and mps_geq_lp(hi, lo)
        assert not mps_geq(lo, hi)

    def test_different_priors(self):
        assert not mps_geq(binary((0.5, 0.0), (0.5, 1.0)), binary((0.5, 0.1), (0.5, 0.5)))

    def test_binary_fast_path_matches_lp(self, rng):
        for _ in range(300):
            if rng.random() < 0.5:
                lo, hi = random_mps_pair(rng, 2)
            else:
                p = rng.dirichlet([1, 1])
                from infocost.posteriors import random_posterior_with_prior
                lo, hi = random_posterior_with_prior(rng, p), random_posterior_with_prior(rng, p)
            assert mps_geq_binary(hi, lo) == mps_geq_lp(hi, lo)
            assert mps_geq_binary(lo, hi) == mps_geq_lp(lo, hi)

    def test_reflexive_transitive(self, rng):
        from infocost.posteriors import split_atoms
        for _ in range(100):
            d = int(rng.integers(2, 4))
            a = random_posterior(rng, d)
            b = split_atoms(rng, a)
            c = split_atoms(rng, b)
            assert mps_geq(a, a)
            assert mps_geq(b, a) and mps_geq(c, b) and mps_geq(c, a)


class TestStrategies:
    def test_single_branch(self, rng):
        pi = random_posterior(rng, 2)
        S = TwoStepStrategy(np.ones(1), (pi,))
        assert strategy_first_round(S).is_trivial()
        assert np.allclose(strategy_mean(S).beliefs, pi.beliefs)

    def test_two_branches(self):
        a, b = binary((0.5, 0.1), (0.5, 0.3)), binary((0.5, 0.6), (0.5, 1.0))
        first = strategy_first_round(TwoStepStrategy(np.array([0.3, 0.7]), (a, b)))
        assert np.allclose(first.weights, [0.3, 0.7])
        assert np.allclose(first.beliefs[:, 1], [0.2, 0.8])

    def test_identical_barycenters_merge(self):
        a, b = binary((0.5, 0.1), (0.5, 0.3)), binary((0.5, 0.0), (0.5, 0.4))
        assert strategy_first_round(TwoStepStrategy(np.array([0.5, 0.5]), (a, b))).is_trivial()

    def test_martingale_and_mps(self, rng):
        for _ in range(100):
            S = random_strategy(rng, int(rng.integers(2, 4)))
            first, mean = strategy_first_round(S), strategy_mean(S)
            assert np.allclose(first.prior, mean.prior, atol=1e-10)
            assert mps_geq(mean, first)

    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidInput):
            TwoStepStrategy(np.array([0.5]), (FULL,))

    def test_mixture_weights(self):
        m = mixture([0.5, 0.5], [FULL, RandomPosterior.point([0.5, 0.5])])
        assert m.size == 3
