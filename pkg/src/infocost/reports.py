"""Result records shared by the axiom and kernel checkers."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass
class AxiomReport:
    """Outcome of a randomized or exhaustive axiom check.

    ``worst_violation`` is a signed gap: positive values violate the axiom.
    ``verdict`` is ``"fail"`` exactly when the gap exceeds ``tolerance``;
    searches that exhaust their budget without a witness report
    ``"inconclusive"``.
    """

    axiom: str
    cost: str
    trials: int
    worst_violation: float
    tolerance: float
    witness: dict | None = None
    seed: int | None = None
    evaluations: int = 0
    details: dict = field(default_factory=dict)
    verdict: str = ""

    def __post_init__(self):
        self.worst_violation = float(self.worst_violation)
        if not self.verdict:
            self.verdict = "fail" if self.worst_violation > self.tolerance else "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["worst_violation"] = _json_float(self.worst_violation)
        return d


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return float(x)


def conjunction(name: str, reports: list[AxiomReport]) -> AxiomReport:
    """Combine reports; the worst gap (relative to tolerance) drives the verdict."""
    worst = max(reports, key=lambda r: r.worst_violation - r.tolerance)
    verdict = "fail" if any(r.verdict == "fail" for r in reports) else (
        "inconclusive" if any(r.verdict == "inconclusive" for r in reports) else "pass")
    return AxiomReport(
        axiom=name,
        cost=reports[0].cost,
        trials=sum(r.trials for r in reports),
        worst_violation=worst.worst_violation,
        tolerance=worst.tolerance,
        witness=worst.witness,
        seed=reports[0].seed,
        evaluations=sum(r.evaluations for r in reports),
        details={"parts": [r.to_dict() for r in reports]},
        verdict=verdict,
    )
