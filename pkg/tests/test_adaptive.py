import math

import pytest

from focksim.adaptive import (
    BleedSchedule, PrimateSymbol, bleed_closed_form, bleed_two_photons,
    equal_spread_closed_form, equal_spread_schedule,
    ghz_from_primates_with_retry, optimize_schedule, primate_fuse,
    primate_fuse_with_retry, primate_fusion_outcomes, primate_state,
    primate_to_ghz, read_primate_symbol, retried_fusion_channel,
    spatial_bleeding)
from focksim.states import tensor

TOL = 1e-10


def test_schedule_validation():
    with pytest.raises(ValueError):
        BleedSchedule(())
    with pytest.raises(ValueError):
        BleedSchedule((0.5, 0.0))
    with pytest.raises(ValueError):
        BleedSchedule((1.2,))
    assert BleedSchedule((0.25, 1.0)).stages == 2


def test_equal_spread_rates():
    sched = equal_spread_schedule(3)
    assert sched.rates == pytest.approx((1 / 4, 1 / 3, 1 / 2))
    # every stage removes the same effective amplitude 1/(S+1)
    passed = 1.0
    for r in sched.rates:
        assert r * passed == pytest.approx(1 / 4)
        passed *= 1 - r


def test_closed_form_matches_algebraic_equal_spread():
    for s in range(1, 13):
        algebraic = s * (1 + s + s * s) / (1 + s) ** 3
        assert bleed_closed_form(equal_spread_schedule(s)) == pytest.approx(
            algebraic, abs=1e-12)
        assert equal_spread_closed_form(s) == pytest.approx(algebraic, abs=1e-12)


def test_tree_matches_closed_form():
    for s in range(1, 6):
        result = bleed_two_photons(equal_spread_schedule(s))
        assert result.p_two_photon == pytest.approx(
            equal_spread_closed_form(s), abs=TOL)
        assert sum(tr.probability for tr in result.traces) == pytest.approx(
            1.0, abs=TOL)


def test_bell_fractions_of_two_photon_yield():
    for s in (1, 3):
        result = bleed_two_photons(equal_spread_schedule(s))
        assert result.p_bell_no_distill == pytest.approx(
            result.p_two_photon / 2, abs=TOL)
        assert result.p_bell_with_distill == pytest.approx(
            result.p_two_photon * 2 / 3, abs=TOL)
        assert result.p_w_heralds == pytest.approx(
            result.p_two_photon / 2, abs=TOL)


def test_optimizer_beats_equal_spread():
    for s in (2, 5):
        _, p_opt = optimize_schedule(s)
        assert p_opt >= equal_spread_closed_form(s) - 1e-12
    sched, p = optimize_schedule(3)
    assert bleed_closed_form(sched) == pytest.approx(p, abs=1e-12)
    assert p / 2 == pytest.approx(0.318029, abs=1e-4)


def test_spatial_equals_temporal():
    for s in (1, 2, 3):
        spatial = spatial_bleeding(s)
        temporal = bleed_two_photons(equal_spread_schedule(s))
        assert len(spatial.traces) == len(temporal.traces)
        assert spatial.p_two_photon == pytest.approx(
            temporal.p_two_photon, abs=TOL)
        assert spatial.p_bell_no_distill == pytest.approx(
            temporal.p_bell_no_distill, abs=TOL)
    with pytest.raises(ValueError):
        spatial_bleeding(5)


def test_primate_symbol_validation():
    with pytest.raises(ValueError):
        PrimateSymbol(0, 0.5, 1)
    with pytest.raises(ValueError):
        PrimateSymbol(1, 1.5, 1)
    with pytest.raises(ValueError):
        PrimateSymbol(1, 0.5, 0)


def test_primate_fuse_against_simulation():
    for l1, l2, t in ((0.5, 1.0, 0.3), (0.8, 0.4, 0.6), (1.0, 1.0, 0.5)):
        a = PrimateSymbol(1, l1, -1)
        b = PrimateSymbol(1, l2, 1)
        sym = primate_fuse(a, b, t)
        p_fock = 0.0
        for o in primate_fusion_outcomes(a, b, t):
            if sum(o.pattern) != 1:
                continue
            p_fock += o.probability
            got = read_primate_symbol(o.residual, 2)
            want = sym.outcome_symbols[o.pattern]
            assert got.lam == pytest.approx(want.lam, abs=TOL)
            assert got.sign == want.sign
        assert p_fock == pytest.approx(sym.p_success, abs=TOL)
    with pytest.raises(ValueError):
        primate_fuse(PrimateSymbol(1, 1.0, 1), PrimateSymbol(1, 1.0, 1), 1.0)


def test_read_primate_symbol_rejects_garbage():
    with pytest.raises(ValueError):
        read_primate_symbol(primate_state(PrimateSymbol(1, 1.0, 1)), 2)


def test_primate_to_ghz_rate():
    conv = primate_to_ghz(PrimateSymbol(1, 0.6, -1), PrimateSymbol(1, 0.9, -1))
    assert conv.p_success == pytest.approx(0.6 * 0.9 / 8, abs=TOL)
    assert conv.min_fidelity == pytest.approx(1.0, abs=1e-9)
    # two qubit pairs classify against the Bell references
    assert set(conv.labels) <= {"phi-minus", "psi-minus", "chi-minus",
                                "chi-plus"}
    three = primate_to_ghz(PrimateSymbol(2, 0.5, 1), PrimateSymbol(1, 0.8, -1))
    assert three.p_success == pytest.approx(0.5 * 0.8 / 8, abs=TOL)
    assert three.labels == ("ghz",)


def test_retried_channel_weights():
    st = tensor(primate_state(PrimateSymbol(1, 0.7, 1)),
                primate_state(PrimateSymbol(1, 0.7, 1)))
    branches = retried_fusion_channel(st, 2, 3)
    vacuum_weight = sum(abs(a) ** 2 for occ, a in st.amplitudes.items()
                        if occ[1] + occ[2] == 0)
    assert sum(w for w, _ in branches) == pytest.approx(
        1.0 - vacuum_weight, abs=TOL)
    for _, branch in branches:
        assert branch.is_normalized()


def test_retry_single_stage_is_plain_fusion():
    a = PrimateSymbol(1, 0.8, -1)
    b = PrimateSymbol(1, 0.5, 1)
    t = 0.35
    res = primate_fuse_with_retry(a, b, BleedSchedule((1 - t,)))
    assert res.p_success == pytest.approx(primate_fuse(a, b, t).p_success,
                                          abs=1e-12)


def test_retry_approaches_limit():
    a = b = PrimateSymbol(1, 1.0, 1)
    gentle = primate_fuse_with_retry(a, b, equal_spread_schedule(10))
    single = primate_fuse_with_retry(a, b, BleedSchedule((0.5,)))
    assert single.p_success < gentle.p_success < gentle.p_limit
    assert gentle.p_limit == pytest.approx(3 / 4, abs=TOL)
    assert gentle.truncated_mass < 1e-9


def test_ghz_from_primates_with_retry():
    for n in (2, 3):
        res = ghz_from_primates_with_retry(n)
        assert res.p_success == pytest.approx(0.5 ** (n - 1), abs=TOL)
        assert res.min_fidelity == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        ghz_from_primates_with_retry(1)
