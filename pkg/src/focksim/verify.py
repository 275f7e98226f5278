"""Acceptance suite: every headline number checked live, one criterion at a time.

Each criterion function recomputes its quantities from the scheme and
protocol implementations and returns structured check rows, so the command
line runner and the test suite share a single source of truth.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import adaptive, resources, schemes
from .circuits import hadamard_matrix, apply_matrix, transition_amplitude
from .measurement import backpropagate_effective_bra, classify_residual, \
    enumerate_outcomes, occupations_with_total, verify_completeness
from .states import DualRailPairing, make_fock, tensor


@dataclass(frozen=True)
class CheckRow:
    """One verified quantity: kinds are abs, rel, ge (at least) and lt (below)."""

    name: str
    expected: float
    measured: float
    tolerance: float = 1e-10
    kind: str = "abs"

    @property
    def deviation(self) -> float:
        if self.kind == "rel":
            return abs(self.measured - self.expected) / abs(self.expected)
        if self.kind == "ge":
            return max(0.0, self.expected - self.measured)
        if self.kind == "lt":
            return max(0.0, self.measured - self.expected)
        return abs(self.measured - self.expected)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    rows: tuple[CheckRow, ...]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def max_deviation(self) -> float:
        return max((r.deviation for r in self.rows), default=0.0)


_REGISTRY: list[tuple[int, str, Callable[[], list[CheckRow]]]] = []


def criterion(number: int, title: str):
    def wrap(fn):
        _REGISTRY.append((number, title, fn))
        return fn
    return wrap


def run(numbers: Sequence[int] | None = None) -> list[CriterionResult]:
    wanted = set(numbers) if numbers else None
    results = []
    for number, title, fn in sorted(_REGISTRY):
        if wanted is not None and number not in wanted:
            continue
        t0 = time.perf_counter()
        rows = tuple(fn())
        results.append(CriterionResult(number, title, rows,
                                       time.perf_counter() - t0))
    return results


def format_line(res: CriterionResult) -> str:
    status = "PASS" if res.passed else "FAIL"
    return (f"[{status}] criterion {res.number:2d}: {res.title} "
            f"({len(res.rows)} checks, max deviation {res.max_deviation:.3e}, "
            f"{res.seconds:.2f}s)")


# Frozen reference points for the bleeding success curve: heralded Bell
# probability against stage count, for the equal-spread and the numerically
# optimized reflectivity schedules.
EQUAL_SPREAD_REFERENCE = {
    1: 0.1875, 2: 0.259259, 3: 0.304688, 4: 0.336, 5: 0.358796,
    6: 0.376093, 7: 0.389648, 8: 0.400549, 9: 0.4095, 10: 0.41698,
    11: 0.423322, 12: 0.428766, 13: 0.433491, 14: 0.43763, 15: 0.441284,
    16: 0.444535, 17: 0.447445, 18: 0.450066, 19: 0.452438, 20: 0.454595,
}
OPTIMIZED_REFERENCE = {
    1: 0.1875, 2: 0.27051, 3: 0.318029, 4: 0.348983, 5: 0.370812,
    6: 0.387058, 7: 0.399634, 8: 0.409665, 9: 0.417856, 10: 0.424673,
    11: 0.430437, 12: 0.435376, 13: 0.439655, 14: 0.443399, 15: 0.446703,
    16: 0.449641, 17: 0.45227, 18: 0.454636, 19: 0.456778, 20: 0.458726,
}

_PAIRING = DualRailPairing(((1, 2), (3, 4)))


def _multiset_deviation(got: Sequence[float], want: Sequence[float]) -> float:
    if len(got) != len(want):
        return math.inf
    return max(abs(a - b) for a, b in zip(sorted(got), sorted(want)))


@criterion(1, "four-photon bell generator pattern probabilities")
def _c1() -> list[CheckRow]:
    rep = schemes.bsg_standard()
    per = {o.pattern: o.probability for o in rep.outcomes}
    agg = rep.aggregates
    return [
        CheckRow("p_bell_total", 3 / 16, agg["p_bell_total"]),
        CheckRow("p_w_total", 3 / 16, agg["p_w_total"]),
        CheckRow("p_two_photon", 3 / 8, agg["p_two_photon"]),
        CheckRow("p_pattern_1100", 1 / 32, per[(1, 1, 0, 0)]),
        CheckRow("p_pattern_2000", 3 / 64, per[(2, 0, 0, 0)]),
    ]


@criterion(2, "herald classification: six bell-class, four w-class, unit fidelity")
def _c2() -> list[CheckRow]:
    rep = schemes.bsg_standard()
    bell = [o for o in rep.outcomes if o.classification is not None
            and o.classification.label in schemes.BELL_CLASS_LABELS]
    wlike = [o for o in rep.outcomes if o.classification is not None
             and o.classification.label == "w-type"]
    fmin = min(o.classification.fidelity for o in bell + wlike)
    has_corrections = all(o.correction for o in bell + wlike)
    return [
        CheckRow("n_bell_patterns", 6, len(bell), 0.0),
        CheckRow("n_w_patterns", 4, len(wlike), 0.0),
        CheckRow("min_classification_fidelity", 1.0, fmin, 1e-9),
        CheckRow("every_herald_has_correction", 1.0, float(has_corrections), 0.0),
    ]


@criterion(3, "four-mode hadamard detector family resolves the two-photon identity")
def _c3() -> list[CheckRow]:
    subspace = occupations_with_total(4, 2)
    ops = [backpropagate_effective_bra(hadamard_matrix(4), (1, 2, 3, 4), p)
           for p in subspace]
    return [CheckRow("max_completeness_deviation", 0.0,
                     verify_completeness(ops, subspace), 1e-9)]


@criterion(4, "procrustean distillation of the w-class heralds")
def _c4() -> list[CheckRow]:
    p_vals, fids = [], []
    labels_ok = True
    for o in enumerate_outcomes(schemes._bsg_state(), (5, 6, 7, 8)):
        if sum(o.pattern) != 2:
            continue
        if classify_residual(o.residual, _PAIRING).label != "w-type":
            continue
        outcome, _, bell_cls = schemes._distill_w42_full(o.residual)
        p_vals.append(outcome.probability)
        fids.append(bell_cls.fidelity)
        labels_ok &= bell_cls.label in schemes.BELL_CLASS_LABELS
    total = schemes.bsg_with_distillation().aggregates["p_bell_total"]
    return [
        CheckRow("n_w_variants", 4, len(p_vals), 0.0),
        CheckRow("max_success_deviation_from_one_third", 0.0,
                 max(abs(p - 1 / 3) for p in p_vals)),
        CheckRow("min_distilled_bell_fidelity", 1.0, min(fids), 1e-9),
        CheckRow("distilled_outputs_are_bell_class", 1.0, float(labels_ok), 0.0),
        CheckRow("p_bell_total_with_distillation", 1 / 4, total),
    ]


@criterion(5, "ancilla-boosted bell generator success rates")
def _c5() -> list[CheckRow]:
    four = schemes.bsg_boosted(4).aggregates["p_bell_like_total"]
    two = schemes.bsg_boosted(2).aggregates["p_bell_like_total"]
    return [
        CheckRow("p_bell_like_four_ancillae", 7 / 32, four),
        CheckRow("p_bell_like_two_ancillae", 13 / 64, two),
    ]


@criterion(6, "eight-photon generator: success 1/4, every herald correctable")
def _c6() -> list[CheckRow]:
    agg = schemes.bsg_8_photon().aggregates
    return [
        CheckRow("p_success", 1 / 4, agg["p_success"]),
        CheckRow("n_six_photon_patterns", 84, agg["n_patterns"], 0.0),
        CheckRow("n_correctable_patterns", 84, agg["n_correctable"], 0.0),
    ]


@criterion(7, "input-position invariance and the eight-mode parity rule")
def _c7() -> list[CheckRow]:
    dev16 = max(abs(schemes.bsg_random_input(mask).aggregates["p_bell_total"]
                    - 3 / 16)
                for mask in itertools.product((0, 1), repeat=4))
    dev70 = 0.0
    for modes in itertools.combinations(range(1, 9), 4):
        xor = 0
        for m in modes:
            xor ^= m - 1
        target = 3 / 16 if xor == 0 else 3 / 32
        measured = schemes.bsg_h8_random(modes).aggregates["p_bell_total"]
        dev70 = max(dev70, abs(measured - target))
    return [
        CheckRow("max_deviation_over_16_masks", 0.0, dev16),
        CheckRow("max_deviation_over_70_input_choices", 0.0, dev70),
    ]


@criterion(8, "adaptive bleeding success curve")
def _c8() -> list[CheckRow]:
    eq_dev = max(abs(adaptive.equal_spread_closed_form(s) / 2
                     - EQUAL_SPREAD_REFERENCE[s]) for s in range(1, 21))
    tree_dev = max(
        abs(adaptive.bleed_two_photons(adaptive.equal_spread_schedule(s))
            .p_two_photon - adaptive.equal_spread_closed_form(s))
        for s in range(1, 11))
    opt_dev = max(abs(adaptive.optimize_schedule(s)[1] / 2
                      - OPTIMIZED_REFERENCE[s]) for s in range(1, 21))
    p20 = adaptive.equal_spread_closed_form(20)
    return [
        CheckRow("max_equal_spread_curve_deviation", 0.0, eq_dev, 1e-6),
        CheckRow("max_tree_vs_closed_form_deviation", 0.0, tree_dev),
        CheckRow("max_optimized_curve_deviation", 0.0, opt_dev, 2e-4),
        CheckRow("with_distillation_rate_at_20_stages", 0.30, p20 * 2 / 3,
                 0.0, kind="ge"),
    ]


@criterion(9, "mode-spread bleeding matches the time-bin protocol")
def _c9() -> list[CheckRow]:
    # Steps hold (stage, pattern, probability); align on the pattern history
    # since probabilities differ at machine precision.
    def key(tr):
        return tuple((stage, pattern) for stage, pattern, _ in tr.steps)

    rows = []
    for s in range(1, 5):
        temporal = adaptive.bleed_two_photons(adaptive.equal_spread_schedule(s))
        spatial = adaptive.spatial_bleeding(s)
        ts = sorted(temporal.traces, key=key)
        ss = sorted(spatial.traces, key=key)
        aligned = len(ts) == len(ss) and all(
            key(a) == key(b) and a.status == b.status
            and a.terminal_label == b.terminal_label
            for a, b in zip(ts, ss))
        pdev = max(abs(a.probability - b.probability)
                   for a, b in zip(ts, ss)) if aligned else math.inf
        rows.append(CheckRow(f"stages_{s}_max_probability_deviation", 0.0, pdev))
        rows.append(CheckRow(f"stages_{s}_traces_align", 1.0, float(aligned), 0.0))
    return rows


@criterion(10, "first-order switch-loss accounting")
def _c10() -> list[CheckRow]:
    eps = 0.01
    const_dev = max(
        abs(resources.bleeding_loss(
            resources.LossModel(eps, adaptive.BleedSchedule((1.0 / s,) * s)))
            - eps / 4)
        for s in (1, 7, 30))
    return [
        CheckRow("constant_schedule_loss_deviation", 0.0, const_dev),
        CheckRow("equal_spread_stage_limit", 81,
                 resources.max_stages_under_budget(0.01), 0.0),
        CheckRow("stage_limit_is_rate_independent", 81,
                 resources.max_stages_under_budget(0.37), 0.0),
        CheckRow("constant_schedule_has_no_limit", 1.0,
                 float(resources.max_stages_under_budget(
                     0.01, family="constant") is None), 0.0),
    ]


@criterion(11, "ghz ring generator and retried-fusion success columns")
def _c11() -> list[CheckRow]:
    rows = []
    for n in (2, 3, 4):
        agg = schemes.ghz_generator(n).aggregates
        rows.append(CheckRow(f"ring_p_success_n{n}", 0.5 ** (2 * n - 1),
                             agg["p_success"]))
        rows.append(CheckRow(f"ring_min_fidelity_n{n}", 1.0,
                             agg["min_success_fidelity"], 1e-9))
    for n in (2, 3):
        res = adaptive.ghz_from_primates_with_retry(n)
        rows.append(CheckRow(f"retried_p_success_n{n}", 0.5 ** (n - 1),
                             res.p_success))
        rows.append(CheckRow(f"retried_min_fidelity_n{n}", 1.0,
                             res.min_fidelity, 1e-9))
    return rows


@criterion(12, "caterpillar fusion algebra, optimum, and photon-cost table")
def _c12() -> list[CheckRow]:
    lam_grid = (0.2, 0.4, 0.6, 0.8, 1.0)
    t_grid = (0.1, 0.3, 0.5, 0.7, 0.9)
    p_dev = lam_dev = 0.0
    signs_ok = True
    for l1, l2, t in itertools.product(lam_grid, lam_grid, t_grid):
        a = adaptive.PrimateSymbol(1, l1, -1)
        b = adaptive.PrimateSymbol(1, l2, -1)
        sym = adaptive.primate_fuse(a, b, t)
        p_fock = 0.0
        for o in adaptive.primate_fusion_outcomes(a, b, t):
            if sum(o.pattern) != 1:
                continue
            p_fock += o.probability
            got = adaptive.read_primate_symbol(o.residual, 2)
            want = sym.outcome_symbols[o.pattern]
            lam_dev = max(lam_dev, abs(got.lam - want.lam))
            signs_ok &= got.sign == want.sign
        p_dev = max(p_dev, abs(p_fock - sym.p_success))
    ghz_dev = 0.0
    for a, b in (
            (adaptive.PrimateSymbol(1, 0.5, -1), adaptive.PrimateSymbol(1, 0.8, -1)),
            (adaptive.PrimateSymbol(2, 0.7, 1), adaptive.PrimateSymbol(1, 1.0, -1)),
            (adaptive.PrimateSymbol(2, 0.6, -1), adaptive.PrimateSymbol(2, 0.9, 1))):
        measured = adaptive.primate_to_ghz(a, b).p_success
        ghz_dev = max(ghz_dev, abs(measured - a.lam * b.lam / 8))
    t_star, n_star = resources.optimize_primate_transmissivity()
    totals = {plan.scheme: plan.total for plan in resources.mux_cost_table()}
    expected_totals = {
        "ghz4-direct": 1024.0,
        "ghz4-from-ghz3-bell": 448.0,
        "ghz4-from-bell-pairs": 320.0,
        "ghz4-from-primates": 128.0 * (1 + math.sqrt(2)),
    }
    rows = [
        CheckRow("max_fusion_probability_deviation_on_grid", 0.0, p_dev),
        CheckRow("max_weight_deviation_on_grid", 0.0, lam_dev),
        CheckRow("herald_signs_match_on_grid", 1.0, float(signs_ok), 0.0),
        CheckRow("max_ghz_conversion_deviation", 0.0, ghz_dev),
        CheckRow("optimal_transmissivity", math.sqrt(2) - 1, t_star, 1e-8),
        CheckRow("optimal_photon_cost", 128.0 * (1 + math.sqrt(2)), n_star,
                 1e-6, kind="rel"),
    ]
    rows += [CheckRow(f"photon_cost_{name}", want, totals[name], 1e-6,
                      kind="rel")
             for name, want in expected_totals.items()]
    return rows


@criterion(13, "rail-merging fusion: plain 1/2, boosted 3/4, complete operator family")
def _c13() -> list[CheckRow]:
    bp = schemes.dual_rail_bell_pair()
    st = tensor(bp, bp)
    plain = sum(o.probability
                for o in schemes.type1_unboosted(st, (3, 4), (5, 6))
                if sum(o.pattern) == 1)
    res = schemes.type1_boosted(st, (3, 4), (5, 6))
    domain = tuple(schemes._OCC_L.values())
    completeness = verify_completeness(res.operators, domain)
    return [
        CheckRow("plain_fusion_success", 1 / 2, plain),
        CheckRow("boosted_single_qubit_outcome", 1 / 2, res.p_single),
        CheckRow("boosted_both_kept_outcome", 1 / 4, res.p_pair),
        CheckRow("boosted_total", 3 / 4, res.p_success),
        CheckRow("n_detection_patterns", 42, res.n_patterns_total, 0.0),
        CheckRow("operator_family_completeness", 0.0, completeness, 1e-9),
        CheckRow("three_pair_chain_boosted", 9 / 16,
                 schemes.three_way_boosted_fusion_probability(True)),
        CheckRow("three_pair_chain_plain", 1 / 4,
                 schemes.three_way_boosted_fusion_probability(False)),
    ]


@criterion(14, "destructive fusion ray tables and bell-measurement score")
def _c14() -> list[CheckRow]:
    single = schemes.type2_boosted("single")
    double = schemes.type2_boosted("double")
    l_ops = schemes.dft3_two_photon_effective_povm()
    m_dev = _multiset_deviation([r.weight for r in single.rays],
                                [2 / 9] * 6 + [1 / 2] * 2 + [2 / 3, 1.0])
    d_dev = _multiset_deviation([r.weight for r in double.rays],
                                [4 / 9] * 6 + [1 / 3, 1.0])
    l_dev = _multiset_deviation([op.weight for op in l_ops],
                                [4 / 9] * 6 + [1 / 3])
    return [
        CheckRow("single_sided_fusion_success", 7 / 12, single.fusion_success),
        CheckRow("double_sided_fusion_success", 2 / 3, double.fusion_success),
        CheckRow("single_ray_weight_multiset_deviation", 0.0, m_dev),
        CheckRow("double_ray_weight_multiset_deviation", 0.0, d_dev),
        CheckRow("heralded_pair_ray_weight_multiset_deviation", 0.0, l_dev),
        CheckRow("bell_measurement_score_below_half", 0.5, single.bsm_score,
                 0.0, kind="lt"),
    ]


@criterion(15, "elementwise evolution agrees with permanent amplitudes")
def _c15() -> list[CheckRow]:
    rng = np.random.default_rng(20260823)
    amp_dev = sum_dev = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(1, 4))
        u = unitary_group.rvs(m, random_state=rng)
        occ = [0] * m
        for k in rng.integers(0, m, size=n):
            occ[k] += 1
        occ_in = tuple(occ)
        state = apply_matrix(make_fock(occ_in), u)
        total = 0.0
        for occ_out in occupations_with_total(m, n):
            amp = transition_amplitude(u, occ_in, occ_out)
            amp_dev = max(amp_dev,
                          abs(amp - state.amplitudes.get(occ_out, 0j)))
            total += abs(amp) ** 2
        sum_dev = max(sum_dev, abs(total - 1.0))
    return [
        CheckRow("max_amplitude_deviation_200_circuits", 0.0, amp_dev),
        CheckRow("max_enumeration_total_deviation", 0.0, sum_dev),
    ]
