"""Feasibility LPs shared by the Blackwell and MPS comparisons."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


def min_residual_lp(M: np.ndarray, b: np.ndarray, E: np.ndarray, e: np.ndarray) -> np.ndarray | None:
    """Nonnegative ``x`` with ``E x = e`` minimizing ``|M x - b|_1``.

    A slack formulation is used because tight two-sided bands around
    ``M x = b`` are declared infeasible by the solver's presolve.  Solver
    tolerances sit well below the callers' 1e-8 acceptance band.
    """
    r, nx = M.shape
    I = np.eye(r)
    res = linprog(
        np.concatenate([np.zeros(nx), np.ones(r)]),
        A_ub=np.block([[M, -I], [-M, -I]]),
        b_ub=np.concatenate([b, -b]),
        A_eq=np.hstack([E, np.zeros((E.shape[0], r))]),
        b_eq=e,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None
    return np.clip(res.x[:nx], 0.0, None)
