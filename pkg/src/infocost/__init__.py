"""Costs of information: experiments, random posteriors, cost functions,
axiom checkers, local kernels and sequential-learning fixed points."""

from ._accel import backend
from .axioms import find_violation, replay, run_check, slp_verdict, trilemma
from .costs import (
    CostFunction,
    Divergence,
    Potential,
    bernoulli_direct,
    combine,
    kl,
    llr_cost,
    mi_cost,
    mlr_cost,
    named_f,
    pie,
    poisson_direct,
    ti_cost,
    tv_cost,
    ups_cost,
    wald_cost,
)
from .experiments import Experiment, Partition, bayes_map, bernoulli, blackwell_geq, poisson_dilution
from .kernels import NotLocallyQuadratic, estimate_kernel, flie_check, integrate_potential_binary
from .posteriors import RandomPosterior, TwoStepStrategy, mps_geq
from .reports import AxiomReport
from .seqlearn import (
    GridCostTable,
    bernoulli_walk_cost,
    bernoulli_walk_limit,
    compute_indirect,
    phi_bruteforce_oracle,
    phi_iterate,
    poisson_cover,
    psi_step,
    table_from_cost,
)
from .simplex import BeliefGrid, InvalidInput

__version__ = "0.1.0"
