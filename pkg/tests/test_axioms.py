import numpy as np
import pytest

from infocost.axioms import (
    TRILEMMA_EXPECTED,
    check_additive,
    check_cmc,
    check_dilution_linear,
    check_monotone,
    check_partition_flatness,
    check_prior_invariant,
    check_quasimetric,
    check_subadditive,
    check_triangle_avg,
    find_violation,
    get_axiom,
    kl_divergence,
    replay,
    run_check,
    slp_verdict,
    trilemma,
)
from infocost.costs import (
    CostFunction,
    Divergence,
    Potential,
    d_mlr,
    entropy_potential,
    llr_cost,
    mi_cost,
    mlr_cost,
    ti_cost,
    tv_cost,
    ups_cost,
    wald_cost,
)
from infocost.posteriors import RandomPosterior, TwoStepStrategy
from infocost.reports import AxiomReport

LLR = llr_cost(np.ones((2, 2)))
TRIALS = 1000


def binary_only() -> CostFunction:
    """Charges 1 for exactly two atoms; splitting further escapes the charge."""
    return CostFunction("binary_only", lambda pi: 1.0 if pi.size == 2 else 0.0)


def assert_replays(C, rep):
    assert rep.witness is not None
    assert replay(C, rep.witness) == pytest.approx(rep.worst_violation, rel=1e-9, abs=1e-12)


class TestReport:
    def test_verdict_from_gap(self):
        assert AxiomReport("a", "c", 1, 2e-9, 1e-9).verdict == "fail"
        assert AxiomReport("a", "c", 1, 1e-9, 1e-9).verdict == "pass"

    def test_unknown_axiom(self):
        with pytest.raises(KeyError):
            get_axiom("nope")


class TestMonotone:
    @pytest.mark.parametrize("C", [mi_cost(), mlr_cost()], ids=["mi", "mlr"])
    def test_pass(self, C):
        rep = check_monotone(C, TRIALS, seed=1)
        assert rep.passed and rep.worst_violation <= 1e-9

    def test_binary_only_fails(self):
        C = binary_only()
        rep = check_monotone(C, 200, seed=0)
        assert rep.verdict == "fail" and rep.worst_violation == pytest.approx(1.0)
        assert_replays(C, rep)

    def test_mi_search_finds_nothing(self):
        res = find_violation(mi_cost(), "monotone", budget=2000, seed=0)
        assert res["witness"] is None


class TestSubadditive:
    @pytest.mark.parametrize("C", [wald_cost(), mlr_cost()], ids=["wald", "mlr"])
    def test_pass(self, C):
        assert check_subadditive(C, TRIALS, seed=2).passed

    def test_llr_witness(self):
        res = find_violation(LLR, "subadditive", budget=100_000, seed=0, stop_at=1e-3)
        assert res["gap"] >= 1e-3 and res["evaluations"] <= 100_000
        assert replay(LLR, res["witness"]) == pytest.approx(res["gap"])

    def test_infinite_branches_satisfy(self):
        # TI is infinite on boundary atoms, so the right-hand side is +inf
        ti = ti_cost(np.ones((2, 2)))
        S = TwoStepStrategy(np.ones(1), (RandomPosterior(np.array([0.5, 0.5]), np.eye(2)),))
        assert get_axiom("subadditive").gap(ti, S) <= 0


class TestTriangle:
    def test_bregman_entropy(self):
        assert check_triangle_avg(mi_cost(), TRIALS, seed=3, tol=1e-9).passed

    def test_mlr(self):
        assert check_triangle_avg(mlr_cost(), TRIALS, seed=3).passed

    def test_llr_divergence_fails(self):
        rep = run_check(LLR, "triangle_avg", 200, seed=0, search_budget=20_000)
        assert rep.verdict == "fail"
        assert_replays(LLR.divergence, rep)

    @pytest.mark.parametrize("C", [mi_cost(), wald_cost(), mlr_cost(), tv_cost(), LLR],
                             ids=["mi", "wald", "mlr", "tv", "llr"])
    def test_agrees_with_subadditivity(self, C):
        kw = {"search_budget": 20_000} if C is LLR else {}
        a = run_check(C, "subadditive", 300, seed=5, **kw)
        b = run_check(C, "triangle_avg", 300, seed=5, **kw)
        assert a.verdict == b.verdict


class TestDilution:
    def test_endpoints_exact(self, rng):
        from infocost.posteriors import random_posterior
        gap = get_axiom("dilution_linear").gap
        for C in (mi_cost(), LLR, mlr_cost()):
            pi = random_posterior(rng, 2)
            assert gap(C, (pi, 0.0)) == 0 and gap(C, (pi, 1.0)) == 0

    @pytest.mark.parametrize("C", [mi_cost(), tv_cost(), wald_cost(), mlr_cost()], ids=["mi", "tv", "wald", "mlr"])
    def test_pass(self, C):
        rep = check_dilution_linear(C, TRIALS, seed=4, tol=1e-10)
        assert rep.passed


class TestAdditive:
    @pytest.mark.parametrize("C", [mi_cost(), ti_cost(np.array([[0, 1, 2], [1, 0, 1], [0.5, 1, 0]]))], ids=["mi", "ti"])
    def test_ups(self, C):
        assert check_additive(C, TRIALS, seed=6, tol=1e-8, d=3).passed

    def test_degenerate_strategy(self):
        S = TwoStepStrategy(np.ones(1), (RandomPosterior.point([0.3, 0.7]),))
        assert get_axiom("additive").gap(mlr_cost(), S) == 0

    def test_mlr_fails(self):
        rep = check_additive(mlr_cost(), 300, seed=0, search_budget=5000)
        assert rep.verdict == "fail"
        assert_replays(mlr_cost(), rep)


class TestCmc:
    def test_ti(self):
        assert check_cmc(ti_cost(np.array([[0, 1, 2], [1, 0, 1], [0.5, 1, 0]])), TRIALS, seed=7, d=3).passed

    def test_llr(self):
        assert check_cmc(LLR, TRIALS, seed=7).passed

    def test_mlr_fails(self):
        rep = check_cmc(mlr_cost(), TRIALS, seed=7)
        assert rep.verdict == "fail" and rep.worst_violation >= 1e-3
        assert_replays(mlr_cost(), rep)


class TestPriorInvariance:
    def test_llr_exact(self):
        rep = check_prior_invariant(LLR, TRIALS, seed=8)
        assert rep.passed and rep.worst_violation == 0

    def test_mlr(self):
        assert check_prior_invariant(mlr_cost(), TRIALS, seed=8, d=3).passed

    def test_wald_fails(self):
        rep = check_prior_invariant(wald_cost(), 200, seed=8)
        assert rep.verdict == "fail"
        assert_replays(wald_cost(), rep)


class TestQuasimetric:
    def test_mlr(self):
        rep = check_quasimetric(Divergence(d_mlr, "D_MLR"), TRIALS, seed=9, d=3)
        assert rep.passed and rep.details["identity_gap"] == 0

    def test_tv(self):
        assert check_quasimetric(tv_cost(), TRIALS, seed=9).passed

    def test_kl_fails(self):
        D = kl_divergence()
        rep = check_quasimetric(D, TRIALS, seed=9, d=3)
        assert rep.verdict == "fail"
        assert_replays(D, rep)


class TestPartitionFlatness:
    def test_mlr(self):
        rep = check_partition_flatness(mlr_cost(), [0.2, 0.3, 0.5])
        assert rep.passed and rep.trials == 4

    def test_mi(self):
        assert not check_partition_flatness(mi_cost(), [0.2, 0.3, 0.5]).passed


class TestSlp:
    @pytest.mark.parametrize("C", [wald_cost(), mlr_cost()], ids=["wald", "mlr"])
    def test_pass(self, C):
        assert slp_verdict(C, TRIALS, seed=10).passed

    def test_llr_fails(self):
        rep = slp_verdict(LLR, 200, seed=0, search_budget=20_000)
        assert rep.verdict == "fail"

    @pytest.mark.parametrize("name", ["entropy", "quadratic", "ti"])
    def test_ups_always_slp(self, name):
        if name == "entropy":
            H = entropy_potential()
        elif name == "quadratic":
            A = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]])
            H = Potential(lambda q: float(q @ A @ q), None, None, "quad")
        else:
            H = ti_cost(np.ones((3, 3))).potential
        assert slp_verdict(ups_cost(H), 300, seed=11, d=3).passed


def test_seeds_reproduce():
    a = check_cmc(mlr_cost(), 100, seed=3).to_dict()
    b = check_cmc(mlr_cost(), 100, seed=3).to_dict()
    assert a == b


@pytest.mark.slow
def test_trilemma_pattern():
    res = trilemma(seed=0, trials=300, budget=3000)
    assert res["matrix"] == TRILEMMA_EXPECTED and res["matches"]
