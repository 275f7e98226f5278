import math

import pytest

from focksim.measurement import occupations_with_total, verify_completeness
from focksim.schemes import (
    BELL_CLASS_LABELS, NotAQubitState, bell_discrimination_rate, bsg_8_photon,
    bsg_boosted, bsg_h8_random, bsg_random_input, bsg_standard,
    bsg_with_distillation, dft3_two_photon_effective_povm, distill_w42,
    dual_rail_bell_pair, ghz_generator, three_way_boosted_fusion_probability,
    type1_boosted, type1_unboosted, type2_boosted)
from focksim.states import reference_state, tensor

TOL = 1e-10


def test_bsg_standard_report():
    rep = bsg_standard()
    assert rep.all_pass
    assert rep.aggregates["p_bell_total"] == pytest.approx(3 / 16, abs=TOL)
    assert rep.aggregates["p_w_total"] == pytest.approx(3 / 16, abs=TOL)
    assert rep.aggregates["p_two_photon"] == pytest.approx(3 / 8, abs=TOL)
    labels = [o.classification.label for o in rep.outcomes
              if o.classification is not None]
    assert sum(lbl in BELL_CLASS_LABELS for lbl in labels) == 6
    assert labels.count("w-type") == 4


def test_distill_reference_w42():
    outcome = distill_w42(reference_state("w42"))
    assert outcome.probability == pytest.approx(1 / 3, abs=TOL)
    assert outcome.residual.is_normalized()


def test_distill_rejects_bell_input():
    with pytest.raises(ValueError):
        distill_w42(reference_state("phi-minus"))


def test_bsg_with_distillation_total():
    rep = bsg_with_distillation()
    assert rep.all_pass
    assert rep.aggregates["p_bell_total"] == pytest.approx(1 / 4, abs=TOL)
    assert rep.aggregates["min_distilled_fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_bsg_boosted_rates():
    four = bsg_boosted(4)
    assert four.all_pass
    assert four.aggregates["p_bell_like_total"] == pytest.approx(7 / 32, abs=TOL)
    assert four.aggregates["p_class_chi-plus"] == pytest.approx(1 / 32, abs=TOL)
    two = bsg_boosted(2)
    assert two.aggregates["p_bell_like_total"] == pytest.approx(13 / 64, abs=TOL)
    assert two.aggregates["p_class_chi-plus"] == pytest.approx(1 / 64, abs=TOL)
    with pytest.raises(ValueError):
        bsg_boosted(3)


def test_bell_discrimination_ladder():
    assert bell_discrimination_rate(0) == pytest.approx(1 / 2, abs=TOL)
    assert bell_discrimination_rate(2) == pytest.approx(5 / 8, abs=TOL)
    assert bell_discrimination_rate(4) == pytest.approx(3 / 4, abs=TOL)


def test_bsg_8_photon():
    rep = bsg_8_photon()
    assert rep.all_pass
    assert rep.aggregates["p_success"] == pytest.approx(1 / 4, abs=TOL)
    assert rep.aggregates["n_patterns"] == 84
    assert rep.aggregates["n_correctable"] == 84


def test_bsg_random_input_masks():
    for mask in ((0, 0, 0, 0), (1, 0, 1, 0), (1, 1, 1, 1)):
        rep = bsg_random_input(mask)
        assert rep.all_pass
        assert rep.aggregates["p_bell_total"] == pytest.approx(3 / 16, abs=TOL)
    with pytest.raises(ValueError):
        bsg_random_input((0, 2, 0, 0))


def test_bsg_h8_parity_rule():
    aligned = bsg_h8_random((1, 2, 3, 4))  # indices 0^1^2^3 = 0
    assert aligned.aggregates["p_bell_total"] == pytest.approx(3 / 16, abs=TOL)
    skewed = bsg_h8_random((1, 2, 3, 5))
    assert skewed.aggregates["p_bell_total"] == pytest.approx(3 / 32, abs=TOL)
    assert aligned.all_pass and skewed.all_pass
    with pytest.raises(ValueError):
        bsg_h8_random((1, 1, 2, 3))


def test_ghz_generator_ladder():
    for n in (2, 3):
        rep = ghz_generator(n)
        assert rep.all_pass
        assert rep.aggregates["p_success"] == pytest.approx(
            0.5 ** (2 * n - 1), abs=TOL)
    with pytest.raises(ValueError):
        ghz_generator(5)


def test_type1_unboosted_success():
    bp = dual_rail_bell_pair()
    outcomes = type1_unboosted(tensor(bp, bp), (3, 4), (5, 6))
    success = sum(o.probability for o in outcomes if sum(o.pattern) == 1)
    assert success == pytest.approx(1 / 2, abs=TOL)
    assert sum(o.probability for o in outcomes) == pytest.approx(1.0, abs=TOL)


def test_type1_rejects_non_qubit_rails():
    # modes (1,3) hold two photons on the |00> branch of phi-plus x phi-plus
    bp = dual_rail_bell_pair()
    with pytest.raises(NotAQubitState):
        type1_unboosted(tensor(bp, bp), (1, 3), (5, 6))


def test_type1_boosted_decomposition():
    bp = dual_rail_bell_pair()
    res = type1_boosted(tensor(bp, bp), (3, 4), (5, 6))
    assert res.p_single == pytest.approx(1 / 2, abs=TOL)
    assert res.p_pair == pytest.approx(1 / 4, abs=TOL)
    assert res.p_success == pytest.approx(3 / 4, abs=TOL)
    assert res.n_patterns_total == 42
    domain = [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]
    assert verify_completeness(res.operators, domain) < 1e-9


def test_three_way_fusion_composition():
    assert three_way_boosted_fusion_probability(True) == pytest.approx(
        9 / 16, abs=TOL)
    assert three_way_boosted_fusion_probability(False) == pytest.approx(
        1 / 4, abs=TOL)


def test_type2_ray_tables():
    single = type2_boosted("single")
    assert single.fusion_success == pytest.approx(7 / 12, abs=TOL)
    assert single.bsm_score == pytest.approx(17 / 36, abs=TOL)
    assert single.completeness_deviation < 1e-9
    assert len(single.rays) == 10
    double = type2_boosted("double")
    assert double.fusion_success == pytest.approx(2 / 3, abs=TOL)
    assert len(double.rays) == 8
    with pytest.raises(ValueError):
        type2_boosted("triple")


def test_type2_on_state():
    bp = dual_rail_bell_pair()
    res = type2_boosted("single", tensor(bp, bp), (3, 4), (5, 6))
    assert res.p_success_on_state == pytest.approx(7 / 12, abs=TOL)
    assert sum(o.probability for o in res.outcomes) == pytest.approx(1.0, abs=TOL)


def test_dft3_two_photon_povm():
    ops = dft3_two_photon_effective_povm()
    assert len(ops) == 7
    weights = sorted(op.weight for op in ops)
    expected = sorted([4 / 9] * 6 + [1 / 3])
    assert all(abs(a - b) < TOL for a, b in zip(weights, expected))
    assert verify_completeness(ops, [(2, 0), (1, 1), (0, 2)]) < 1e-9
