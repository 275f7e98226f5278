"""Adaptive multi-stage protocols: photon bleeding and retried fusions.

Bleeding taps a little of each signal mode into a fresh detector layer per
stage and stops once two photons have been seen.  The same idea retries a
fusion that yielded no detection instead of discarding the state.  Both are
simulated exactly as branching trees over detection records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import minimize_scalar

from .circuits import Circuit, apply_elementwise, dft_matrix, hadamard_matrix
from .measurement import Classification, classify_residual, enumerate_outcomes, \
    restrict_to_modes
from .schemes import BELL_CLASS_LABELS, outcomes_in_place
from .states import DualRailPairing, PureState, make_fock, reference_state, \
    tensor, vacuum

_PAIRING_12_34 = DualRailPairing(((1, 2), (3, 4)))
_TRACE_PRUNE = 1e-14
_RETRY_TRUNCATION = 1e-12


# --- tap schedules ----------------------------------------------------------

@dataclass(frozen=True)
class BleedSchedule:
    """Per-stage tap reflectivities, each in (0, 1]."""

    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ValueError("schedule needs at least one stage")
        if any(not 0.0 < r <= 1.0 for r in rates):
            raise ValueError("tap reflectivities must lie in (0, 1]")
        object.__setattr__(self, "rates", rates)

    @property
    def stages(self) -> int:
        return len(self.rates)


def equal_spread_schedule(stages: int) -> BleedSchedule:
    """Schedule whose effective tap is the same 1/(stages+1) at every stage."""
    if stages < 1:
        raise ValueError("stage count must be at least 1")
    return BleedSchedule(tuple(1.0 / (stages - k + 2)
                               for k in range(1, stages + 1)))


def _effective_taps(rates: Sequence[float]) -> tuple[list[float], list[float]]:
    # r_eff[k]: amplitude fraction removed at stage k as seen from the input;
    # t_eff[k]: fraction still untouched after stage k.
    r_eff, t_eff = [], []
    passed = 1.0
    for r in rates:
        r_eff.append(r * passed)
        passed *= 1.0 - r
        t_eff.append(passed)
    return r_eff, t_eff


def bleed_closed_form(schedule: BleedSchedule | int) -> float:
    """Probability that bleeding stops with exactly two photons detected.

    Sums the two-at-one-stage and one-at-each-of-two-stages detection paths;
    agrees with the exact branching tree of bleed_two_photons.
    """
    if isinstance(schedule, int):
        schedule = equal_spread_schedule(schedule)
    r_eff, t_eff = _effective_taps(schedule.rates)
    stages = schedule.stages
    p = sum(6.0 * r_eff[k] ** 2 * t_eff[k] ** 2 for k in range(stages))
    for k2 in range(stages):
        tail = 3.0 * t_eff[k2] ** 2 * r_eff[k2]
        p += sum(4.0 * r_eff[k1] * tail for k1 in range(k2))
    return p


def equal_spread_closed_form(stages: int) -> float:
    """Algebraic form of bleed_closed_form for the equal-spread schedule."""
    if stages < 1:
        raise ValueError("stage count must be at least 1")
    s = float(stages)
    return s * (1.0 + s + s * s) / (1.0 + s) ** 3


def optimize_schedule(stages: int) -> tuple[BleedSchedule, float]:
    """Maximize the two-photon success probability over tap schedules.

    Deterministic coordinate ascent from several starting schedules, one
    bounded scalar minimization per coordinate, iterated until the objective
    gains less than 1e-10.
    """
    if stages < 1:
        raise ValueError("stage count must be at least 1")
    starts = [equal_spread_schedule(stages).rates,
              (1.0 / (stages + 1),) * stages,
              (0.5 / (stages + 1),) * stages,
              (min(0.5, 2.0 / (stages + 1)),) * stages]
    best_rates, best_val = None, -1.0
    for start in starts:
        rates = list(start)
        val = bleed_closed_form(BleedSchedule(tuple(rates)))
        while True:
            gained = 0.0
            for k in range(stages):
                def objective(x, k=k):
                    trial = rates.copy()
                    trial[k] = x
                    return -bleed_closed_form(BleedSchedule(tuple(trial)))
                res = minimize_scalar(objective, bounds=(1e-9, 1.0 - 1e-9),
                                      method="bounded",
                                      options={"xatol": 1e-12})
                if -res.fun > val:
                    gained += -res.fun - val
                    val = -res.fun
                    rates[k] = float(res.x)
            if gained < 1e-10:
                break
        if val > best_val:
            best_rates, best_val = tuple(rates), val
    return BleedSchedule(best_rates), best_val


# --- exact bleeding tree ----------------------------------------------------

@dataclass(frozen=True)
class ProtocolTrace:
    """One adaptive run: (stage, detector pattern, branch probability) steps."""

    steps: tuple[tuple[int, tuple[int, ...], float], ...]
    status: str
    probability: float
    terminal_state: PureState | None
    terminal_label: str


@dataclass(frozen=True)
class BleedResult:
    schedule: BleedSchedule
    p_two_photon: float
    p_bell_no_distill: float
    p_bell_with_distill: float
    p_w_heralds: float
    traces: tuple[ProtocolTrace, ...]


def _state_key(s: PureState):
    items = sorted(s.amplitudes.items())
    pivot = next(a for _, a in items if abs(a) > 1e-9)
    phase = abs(pivot) / pivot
    return tuple((occ, round((a * phase).real, 10), round((a * phase).imag, 10))
                 for occ, a in items)


class _StageCache:
    def __init__(self):
        self.outcomes: dict = {}
        self.labels: dict = {}

    def stage(self, state: PureState, r: float):
        key = (_state_key(state), round(r, 12))
        if key not in self.outcomes:
            st = tensor(state, vacuum(4))
            c = Circuit(8)
            for i in range(1, 5):
                c.coupler(i, i + 4, r)
            c.add(hadamard_matrix(4), (5, 6, 7, 8))
            st = apply_elementwise(c, st)
            self.outcomes[key] = [(o.pattern, o.probability, o.residual)
                                  for o in enumerate_outcomes(st, (5, 6, 7, 8))]
        return self.outcomes[key]

    def label(self, state: PureState) -> str:
        key = _state_key(state)
        if key not in self.labels:
            self.labels[key] = classify_residual(state, _PAIRING_12_34).label
        return self.labels[key]


def bleed_two_photons(schedule: BleedSchedule) -> BleedResult:
    """Run the bleeding protocol on four photons as an exact branching tree.

    Each stage taps all four modes at the scheduled reflectivity into a
    Hadamard-mixed detector layer.  The run stops as a success once two
    photons in total have been detected; more than two is a failure, fewer
    when the schedule ends is a failure.  Successful residuals split evenly
    between Bell-class and W-class heralds; distilling the latter at 1/3
    gives the improved Bell rate.
    """
    cache = _StageCache()
    rates = schedule.rates
    traces: list[ProtocolTrace] = []
    totals = {"p": 0.0, "bell": 0.0, "w": 0.0}

    def walk(state, stage_idx, detected, prob, steps):
        if stage_idx == len(rates):
            traces.append(ProtocolTrace(steps, "failure", prob, state,
                                        "undershoot"))
            return
        for pattern, branch_p, residual in cache.stage(state, rates[stage_idx]):
            p = prob * branch_p
            if p < _TRACE_PRUNE:
                continue
            nd = detected + sum(pattern)
            step = steps + ((stage_idx + 1, pattern, branch_p),)
            if nd == 2:
                label = cache.label(residual)
                totals["p"] += p
                if label in BELL_CLASS_LABELS:
                    totals["bell"] += p
                elif label == "w-type":
                    totals["w"] += p
                traces.append(ProtocolTrace(step, "success", p, residual,
                                            label))
            elif nd > 2:
                traces.append(ProtocolTrace(step, "failure", p, residual,
                                            "overshoot"))
            else:
                walk(residual, stage_idx + 1, nd, p, step)

    walk(make_fock((1, 1, 1, 1)), 0, 0, 1.0, ())
    return BleedResult(schedule, totals["p"], totals["bell"],
                       totals["bell"] + totals["w"] / 3.0, totals["w"],
                       tuple(traces))


def spatial_bleeding(stages: int) -> BleedResult:
    """Bleeding unrolled in space: one detector rail per stage and mode.

    Each of four groups holds a signal rail plus one rail per stage; a
    discrete Fourier transform spreads the photon evenly over its group, and
    stage k measures rail k of all groups through a 4-mode Hadamard.  On
    success the surviving rails are Fourier-recombined onto the signal rails.
    Equivalent, trace by trace, to temporal bleeding with the equal-spread
    schedule.
    """
    if stages < 1 or stages > 4:
        raise ValueError("stage count out of range (1..4)")
    group = stages + 1
    n_modes = 4 * group
    signal = tuple(g * group + 1 for g in range(4))
    occ = [0] * n_modes
    for m in signal:
        occ[m - 1] = 1
    c = Circuit(n_modes)
    for g in range(4):
        c.add(dft_matrix(group), tuple(g * group + 1 + t for t in range(group)))
    state = apply_elementwise(c, make_fock(occ))

    traces: list[ProtocolTrace] = []
    totals = {"p": 0.0, "bell": 0.0, "w": 0.0}

    def despread(residual, k):
        m = group - k
        if m > 1:
            u = dft_matrix(m).conj().T
            c2 = Circuit(n_modes)
            for g in range(4):
                rails = (g * group + 1,) + tuple(g * group + 1 + t
                                                 for t in range(k + 1, stages + 1))
                c2.add(u, rails)
            residual = apply_elementwise(c2, residual)
        return restrict_to_modes(residual, signal)

    def walk(st, k, detected, prob, steps):
        if k > stages:
            traces.append(ProtocolTrace(steps, "failure", prob, st,
                                        "undershoot"))
            return
        # a stopped run never reaches the downstream detector layers, so each
        # stage's mixing layer is applied only when that stage is measured
        ports = tuple(g * group + 1 + k for g in range(4))
        layer = Circuit(n_modes)
        layer.add(hadamard_matrix(4), ports)
        for o in outcomes_in_place(apply_elementwise(layer, st), ports):
            p = prob * o.probability
            if p < _TRACE_PRUNE:
                continue
            nd = detected + sum(o.pattern)
            step = steps + ((k, o.pattern, o.probability),)
            if nd == 2:
                res4 = despread(o.residual, k)
                label = classify_residual(res4, _PAIRING_12_34).label
                totals["p"] += p
                if label in BELL_CLASS_LABELS:
                    totals["bell"] += p
                elif label == "w-type":
                    totals["w"] += p
                traces.append(ProtocolTrace(step, "success", p, res4, label))
            elif nd > 2:
                traces.append(ProtocolTrace(step, "failure", p, o.residual,
                                            "overshoot"))
            else:
                walk(o.residual, k + 1, nd, p, step)

    walk(state, 1, 0, 1.0, ())
    return BleedResult(equal_spread_schedule(stages), totals["p"],
                       totals["bell"], totals["bell"] + totals["w"] / 3.0,
                       totals["w"], tuple(traces))


# --- caterpillar states and their fusions -----------------------------------

@dataclass(frozen=True)
class PrimateSymbol:
    """Caterpillar state descriptor: qubit yield, live weight and branch sign."""

    photons: int
    lam: float
    sign: int

    def __post_init__(self):
        if self.photons < 1:
            raise ValueError("photon pair count must be at least 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("live weight must lie in [0, 1]")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def primate_state(symbol: PrimateSymbol) -> PureState:
    """Fock-space representative of a caterpillar symbol on 2n modes."""
    return reference_state("primate", n=symbol.photons, lam=symbol.lam,
                           sign="+" if symbol.sign > 0 else "-")


@dataclass(frozen=True)
class PrimateFusion:
    """Symbolic fusion herald: total success probability and result symbols."""

    p_success: float
    result: PrimateSymbol
    result_alt: PrimateSymbol

    @property
    def outcome_symbols(self) -> dict:
        return {(1, 0): self.result, (0, 1): self.result_alt}


def primate_fuse(a: PrimateSymbol, b: PrimateSymbol,
                 t: float) -> PrimateFusion:
    """Closed-form fusion of two caterpillar states at transmissivity t.

    Both ends tap reflectivity 1-t into a balanced detector pair; exactly one
    detected photon heralds success.  The (1,0) outcome keeps the product of
    the input signs, the (0,1) outcome flips it; each carries half the total
    probability.
    """
    if not 0.0 < t < 1.0:
        raise ValueError("transmissivity must lie in (0, 1)")
    l1, l2 = a.lam, b.lam
    denom = l1 + l2 - l1 * l2 * (1.0 - t * t)
    p = t * (1.0 - t) * denom
    lam_new = l1 * l2 / denom if denom > 0 else 0.0
    n = a.photons + b.photons
    return PrimateFusion(p, PrimateSymbol(n, lam_new, a.sign * b.sign),
                         PrimateSymbol(n, lam_new, -a.sign * b.sign))


def _fusion_outcomes(state: PureState, i: int, j: int, r: float):
    # Tap modes i and j at reflectivity r into a fresh balanced detector pair
    # appended after the existing modes; residuals keep their numbering.
    total = state.mode_count
    st = tensor(state, vacuum(2))
    d1, d2 = total + 1, total + 2
    c = Circuit(total + 2)
    c.coupler(i, d1, r)
    c.coupler(j, d2, r)
    c.coupler(d1, d2, 0.5)
    return enumerate_outcomes(apply_elementwise(c, st), (d1, d2))


def primate_fusion_outcomes(a: PrimateSymbol, b: PrimateSymbol, t: float):
    """Exact Fock-level fusion outcomes for two caterpillar states.

    Joins the last mode of a with the first mode of b at transmissivity t and
    returns every detector outcome; single-photon patterns are the heralds
    predicted by primate_fuse.
    """
    sa, sb = primate_state(a), primate_state(b)
    st = tensor(sa, sb)
    return _fusion_outcomes(st, 2 * a.photons, 2 * a.photons + 1, 1.0 - t)


def read_primate_symbol(residual: PureState, photons: int) -> PrimateSymbol:
    """Identify the caterpillar symbol carried by a fusion residual."""
    left = (2,) + (0, 1) * (photons - 1) + (0,)
    right = (0,) + (1, 0) * (photons - 1) + (2,)
    a1 = residual.amplitudes.get(left, 0j)
    a2 = residual.amplitudes.get(right, 0j)
    if abs(a1) < 1e-9 or abs(abs(a1) - abs(a2)) > 1e-9:
        raise ValueError("residual does not carry a caterpillar state")
    lam = 2.0 * abs(a1) ** 2
    ratio = a2 / a1
    if abs(ratio.imag) > 1e-9 or abs(abs(ratio.real) - 1.0) > 1e-9:
        raise ValueError("branch amplitudes are not real-ratio")
    return PrimateSymbol(photons, min(lam, 1.0), 1 if ratio.real > 0 else -1)


@dataclass(frozen=True)
class GhzConversion:
    p_success: float
    min_fidelity: float
    labels: tuple[str, ...]
    n_outcomes: int


def primate_to_ghz(a: PrimateSymbol, b: PrimateSymbol,
                   t: float = 0.5) -> GhzConversion:
    """Fuse two caterpillar states and close the ring into a GHZ state.

    An inner fusion joins the chains, a second fusion joins the two outer
    double-occupied modes; both succeeding (probability lam_a*lam_b/8 at
    t=1/2) leaves an (n_a+n_b)-qubit GHZ state on consecutive mode pairs.
    """
    sa, sb = primate_state(a), primate_state(b)
    st = tensor(sa, sb)
    n = a.photons + b.photons
    pairing = DualRailPairing(tuple((2 * q + 1, 2 * q + 2) for q in range(n)))
    r = 1.0 - t
    p_total = 0.0
    labels = set()
    fmin = 1.0
    count = 0
    for o1 in _fusion_outcomes(st, 2 * a.photons, 2 * a.photons + 1, r):
        if sum(o1.pattern) != 1:
            continue
        for o2 in _fusion_outcomes(o1.residual, 1, 2 * n, r):
            if sum(o2.pattern) != 1:
                continue
            p_total += o1.probability * o2.probability
            cls = classify_residual(o2.residual, pairing)
            labels.add(cls.label)
            fmin = min(fmin, cls.fidelity)
            count += 1
    return GhzConversion(p_total, fmin, tuple(sorted(labels)), count)


# --- retried fusion ---------------------------------------------------------

def _annihilate(s: PureState, mode: int) -> PureState:
    amps = {}
    for occ, a in s.amplitudes.items():
        n = occ[mode - 1]
        if n == 0:
            continue
        low = list(occ)
        low[mode - 1] = n - 1
        amps[tuple(low)] = a * math.sqrt(n)
    return PureState(s.mode_count, amps)


def retried_fusion_channel(state: PureState, i: int,
                           j: int) -> list[tuple[float, PureState]]:
    """Limit of retrying a fusion on modes (i, j) until one photon is seen.

    Infinitely many weak taps resolve the photon number on the fused pair, so
    sectors decohere; within each occupied sector the detector parity leaves
    one of two coherent branches with one photon removed.  Returns (weight,
    state) branches whose weights sum to one minus the weight of the
    vacuum sector, which can never herald.
    """
    sectors: dict[int, dict] = {}
    for occ, a in state.amplitudes.items():
        sectors.setdefault(occ[i - 1] + occ[j - 1], {})[occ] = a
    branches = []
    for nph, amps in sorted(sectors.items()):
        if nph == 0:
            continue
        sector = PureState(state.mode_count, amps)
        lowered_i = _annihilate(sector, i)
        lowered_j = _annihilate(sector, j)
        for sign in (1, -1):
            br = (lowered_i + lowered_j.scaled(sign)).scaled(
                1.0 / math.sqrt(2 * nph))
            w = br.norm_squared()
            if w < 1e-14:
                continue
            branches.append((w, br.normalized()))
    return branches


@dataclass(frozen=True)
class RetryResult:
    p_success: float
    p_limit: float
    truncated_mass: float


def primate_fuse_with_retry(a: PrimateSymbol, b: PrimateSymbol,
                            schedule: BleedSchedule) -> RetryResult:
    """Fuse two caterpillar states with scheduled weak taps and retries.

    Stage k taps both junction modes at the scheduled reflectivity; no
    detection continues to the next stage, one photon is a success, more is a
    failure.  A single stage at reflectivity 1-t reproduces primate_fuse(t);
    long gentle schedules approach p_limit, the success probability of the
    limiting retried channel.
    """
    sa, sb = primate_state(a), primate_state(b)
    st = tensor(sa, sb)
    i, j = 2 * a.photons, 2 * a.photons + 1
    vacuum_weight = sum(abs(amp) ** 2 for occ, amp in st.amplitudes.items()
                        if occ[i - 1] + occ[j - 1] == 0)
    tally = {"success": 0.0, "truncated": 0.0}

    def walk(state, stage_idx, prob):
        if prob < _RETRY_TRUNCATION:
            tally["truncated"] += prob
            return
        if stage_idx == schedule.stages:
            return
        for o in _fusion_outcomes(state, i, j, schedule.rates[stage_idx]):
            n = sum(o.pattern)
            p = prob * o.probability
            if n == 1:
                tally["success"] += p
            elif n == 0:
                walk(o.residual, stage_idx + 1, p)

    walk(st, 0, 1.0)
    return RetryResult(tally["success"], 1.0 - vacuum_weight,
                       tally["truncated"])


@dataclass(frozen=True)
class RetryPipelineResult:
    p_success: float
    min_fidelity: float
    labels: tuple[str, ...]


def ghz_from_primates_with_retry(n: int) -> RetryPipelineResult:
    """Build an n-qubit GHZ state from n elementary caterpillar states with
    every fusion retried to its limit.

    Chain fusions join one fresh two-photon caterpillar at a time, the ring
    fusion closes the outer modes; success probability is 1/2^(n-1) and every
    surviving branch is a perfect GHZ state on consecutive mode pairs.
    """
    if n < 2:
        raise ValueError("qubit count must be at least 2")
    one = primate_state(PrimateSymbol(1, 1.0, -1))
    members = [(1.0, one)]
    for k in range(1, n):
        grown = []
        for w, s in members:
            for wb, sb in retried_fusion_channel(tensor(s, one),
                                                 2 * k, 2 * k + 1):
                grown.append((w * wb, sb))
        members = grown
    pairing = DualRailPairing(tuple((2 * q + 1, 2 * q + 2) for q in range(n)))
    p_total = 0.0
    labels = set()
    fmin = 1.0
    for w, s in members:
        for wb, sb in retried_fusion_channel(s, 1, 2 * n):
            p_total += w * wb
            cls = classify_residual(sb, pairing)
            labels.add(cls.label)
            fmin = min(fmin, cls.fidelity)
    return RetryPipelineResult(p_total, fmin, tuple(sorted(labels)))
