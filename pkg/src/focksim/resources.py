"""Analytic resource accounting: switch-loss budgets and photon costs.

Loss from the active taps of a bleeding circuit is tracked to first order;
photon costs assume perfectly resource-efficient multiplexing, where a state
that takes N photons per attempt and succeeds with probability p costs
N' = N/p photons on average.  Every probability is queried live from the
scheme and protocol implementations, never hard-coded.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Mapping

from scipy.optimize import minimize_scalar

from .adaptive import BleedSchedule, PrimateSymbol, equal_spread_schedule, \
    primate_fuse, primate_to_ghz
from .schemes import dual_rail_bell_pair, ghz_generator, type1_unboosted
from .states import tensor

_STAGE_CAP = 10_000


# --- switch loss ------------------------------------------------------------

@dataclass(frozen=True)
class LossModel:
    """First-order per-switch loss rate together with a tap schedule."""

    epsilon: float
    schedule: BleedSchedule

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("loss rate must lie in [0, 1)")


def bleeding_loss(model: LossModel) -> float:
    """Total first-order loss of a bleeding circuit: (epsilon/4) sum of taps.

    A tap at reflectivity r contributes r*epsilon/4 of effective loss, so a
    constant schedule r_k = 1/S costs epsilon/4 regardless of the stage
    count, while the equal-spread schedule grows logarithmically.
    """
    return model.epsilon / 4.0 * sum(model.schedule.rates)


def max_stages_under_budget(epsilon: float,
                            family: str = "equal-spread") -> int | None:
    """Largest stage count whose accumulated tap loss stays within epsilon.

    The budget is one switch's worth of loss, so the answer is independent of
    epsilon.  The constant family never exceeds it and returns None (no
    limit); the search is a direct summation capped at 10000 stages.
    """
    if epsilon <= 0.0:
        raise ValueError("loss rate must be positive")
    if family == "constant":
        return None
    if family != "equal-spread":
        raise ValueError("family must be 'equal-spread' or 'constant'")
    # equal spread taps sum to 1/2 + 1/3 + ... + 1/(S+1)
    tap_sum = 0.0
    for stages in range(1, _STAGE_CAP + 1):
        tap_sum += 1.0 / (stages + 1)
        if epsilon / 4.0 * tap_sum > epsilon:
            return stages - 1
    return None


# --- multiplexed photon costs -----------------------------------------------

@dataclass(frozen=True)
class MuxStage:
    stage: str
    input_cost: float
    success_probability: float

    def __post_init__(self):
        if not 0.0 < self.success_probability <= 1.0:
            raise ValueError("success probability must lie in (0, 1]")

    @property
    def output_cost(self) -> float:
        return self.input_cost / self.success_probability


@dataclass(frozen=True)
class MuxCostPlan:
    scheme: str
    stages: tuple[MuxStage, ...]

    @property
    def total(self) -> float:
        return self.stages[-1].output_cost


@functools.lru_cache(maxsize=8)
def _ghz_success(n: int) -> float:
    return ghz_generator(n).aggregates["p_success"]


@functools.lru_cache(maxsize=1)
def _bell_fusion_success() -> float:
    bp = dual_rail_bell_pair()
    outcomes = type1_unboosted(tensor(bp, bp), (3, 4), (5, 6))
    return sum(o.probability for o in outcomes if sum(o.pattern) == 1)


def default_providers() -> dict[str, Callable]:
    """Live probability sources backing the photon-cost table."""
    return {
        "ghz_success": _ghz_success,
        "fusion_success": _bell_fusion_success,
        "caterpillar_fusion": lambda t: primate_fuse(
            PrimateSymbol(1, 1.0, -1), PrimateSymbol(1, 1.0, -1), t),
        "caterpillar_to_ghz": lambda sym: primate_to_ghz(sym, sym).p_success,
    }


MUX_SCHEMES = ("ghz4-direct", "ghz4-from-ghz3-bell", "ghz4-from-bell-pairs",
               "ghz4-from-primates")


def mux_photon_cost(scheme: str,
                    providers: Mapping[str, Callable] | None = None) -> MuxCostPlan:
    """Average single-photon cost of a 4-qubit GHZ state under perfect
    multiplexing, built stage by stage from live success probabilities.

    Schemes: direct 8-photon generation; 3-qubit GHZ plus Bell pair fused
    once; three Bell pairs fused twice; two-photon caterpillar pairs at the
    cost-optimal transmissivity converted in a final double fusion.
    """
    prov = dict(default_providers())
    if providers:
        prov.update(providers)
    if scheme == "ghz4-direct":
        stages = (MuxStage("8-photon ghz ring", 8.0, prov["ghz_success"](4)),)
    elif scheme == "ghz4-from-ghz3-bell":
        p3 = prov["ghz_success"](3)
        p2 = prov["ghz_success"](2)
        n3, n2 = 6.0 / p3, 4.0 / p2
        stages = (MuxStage("6-photon ghz3 ring", 6.0, p3),
                  MuxStage("4-photon bell ring", 4.0, p2),
                  MuxStage("fuse ghz3 with bell", n3 + n2,
                           prov["fusion_success"]()))
    elif scheme == "ghz4-from-bell-pairs":
        p2 = prov["ghz_success"](2)
        pf = prov["fusion_success"]()
        n2 = 4.0 / p2
        first = MuxStage("fuse two bell pairs", 2.0 * n2, pf)
        stages = (MuxStage("4-photon bell ring", 4.0, p2), first,
                  MuxStage("fuse ghz3 with third pair",
                           first.output_cost + n2, pf))
    elif scheme == "ghz4-from-primates":
        t_star = math.sqrt(2.0) - 1.0
        fusion = prov["caterpillar_fusion"](t_star)
        n_two = 4.0 / fusion.p_success
        stages = (MuxStage("pair two elementary caterpillars", 4.0,
                           fusion.p_success),
                  MuxStage("double fusion into ghz4", 2.0 * n_two,
                           prov["caterpillar_to_ghz"](fusion.result)))
    else:
        raise ValueError(f"unknown multiplexing scheme {scheme!r}")
    return MuxCostPlan(scheme, stages)


def mux_cost_table(providers: Mapping[str, Callable] | None = None
                   ) -> tuple[MuxCostPlan, ...]:
    """All four 4-qubit GHZ photon-cost plans in presentation order."""
    return tuple(mux_photon_cost(s, providers) for s in MUX_SCHEMES)


# --- caterpillar transmissivity optimization --------------------------------

def primate_photon_cost(t: float) -> float:
    """Photon cost of the caterpillar route as a function of the pairing
    transmissivity, composed from the fusion law: 2*(4/p_pair)/p_ghz."""
    fusion = primate_fuse(PrimateSymbol(1, 1.0, -1),
                          PrimateSymbol(1, 1.0, -1), t)
    lam = fusion.result.lam
    return 2.0 * (4.0 / fusion.p_success) / (lam * lam / 8.0)


def optimize_primate_transmissivity() -> tuple[float, float]:
    """Transmissivity minimizing the caterpillar photon cost.

    Returns (t_star, n_star); the optimum trades pairing success against the
    live weight entering the final fusions and sits at sqrt(2)-1 with a cost
    of 128(1+sqrt(2)) photons.
    """
    res = minimize_scalar(primate_photon_cost, bounds=(1e-6, 1.0 - 1e-6),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(res.fun)
