import math

import pytest
from hypothesis import given, settings, strategies as st

from focksim.adaptive import BleedSchedule, equal_spread_schedule
from focksim.resources import (
    LossModel, MuxStage, bleeding_loss, default_providers,
    max_stages_under_budget, mux_cost_table, mux_photon_cost,
    optimize_primate_transmissivity, primate_photon_cost)


def test_loss_model_validation():
    sched = equal_spread_schedule(2)
    with pytest.raises(ValueError):
        LossModel(-0.1, sched)
    with pytest.raises(ValueError):
        LossModel(1.0, sched)
    assert LossModel(0.0, sched).epsilon == 0.0


def test_constant_schedule_loss_is_quarter_epsilon():
    for s in (1, 4, 25):
        model = LossModel(0.08, BleedSchedule((1.0 / s,) * s))
        assert bleeding_loss(model) == pytest.approx(0.02, abs=1e-12)


def test_equal_spread_loss_grows_harmonically():
    eps = 0.4
    model = LossModel(eps, equal_spread_schedule(5))
    harmonic = sum(1.0 / k for k in range(2, 7))
    assert bleeding_loss(model) == pytest.approx(eps / 4 * harmonic, abs=1e-12)


rates_lists = st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=6)


@settings(max_examples=50, deadline=None)
@given(rates_lists, rates_lists, st.floats(1e-6, 0.99))
def test_loss_is_linear_and_additive(r1, r2, eps):
    a = bleeding_loss(LossModel(eps, BleedSchedule(tuple(r1))))
    b = bleeding_loss(LossModel(eps, BleedSchedule(tuple(r2))))
    joined = bleeding_loss(LossModel(eps, BleedSchedule(tuple(r1 + r2))))
    assert joined == pytest.approx(a + b, rel=1e-12, abs=1e-15)
    half = bleeding_loss(LossModel(eps / 2, BleedSchedule(tuple(r1))))
    assert half == pytest.approx(a / 2, rel=1e-12, abs=1e-15)


def test_stage_budget():
    assert max_stages_under_budget(0.01) == 81
    assert max_stages_under_budget(0.5) == 81  # rate-independent
    assert max_stages_under_budget(0.01, family="constant") is None
    with pytest.raises(ValueError):
        max_stages_under_budget(0.0)
    with pytest.raises(ValueError):
        max_stages_under_budget(0.01, family="geometric")


def test_mux_stage_validation():
    with pytest.raises(ValueError):
        MuxStage("s", 4.0, 0.0)
    with pytest.raises(ValueError):
        MuxStage("s", 4.0, 1.5)
    stage = MuxStage("s", 6.0, 0.25)
    assert stage.output_cost == pytest.approx(24.0)


def test_photon_cost_table():
    totals = {plan.scheme: plan.total for plan in mux_cost_table()}
    assert totals["ghz4-direct"] == pytest.approx(1024.0, rel=1e-6)
    assert totals["ghz4-from-ghz3-bell"] == pytest.approx(448.0, rel=1e-6)
    assert totals["ghz4-from-bell-pairs"] == pytest.approx(320.0, rel=1e-6)
    assert totals["ghz4-from-primates"] == pytest.approx(
        128.0 * (1 + math.sqrt(2)), rel=1e-6)
    with pytest.raises(ValueError):
        mux_photon_cost("ghz5-direct")


def test_stage_chaining_invariant():
    for plan in mux_cost_table():
        for stage in plan.stages:
            assert stage.output_cost == pytest.approx(
                stage.input_cost / stage.success_probability, abs=1e-12)
        assert plan.total == plan.stages[-1].output_cost


def test_totals_follow_injected_probabilities():
    # the table must be computed from live providers, not stored literals
    plan = mux_photon_cost("ghz4-direct",
                           providers={"ghz_success": lambda n: 1 / 64})
    assert plan.total == pytest.approx(512.0)
    plan = mux_photon_cost("ghz4-from-bell-pairs",
                           providers={"fusion_success": lambda: 0.25})
    assert plan.total == pytest.approx((2 * 32 / 0.25 + 32) / 0.25)


def test_default_providers_are_live():
    prov = default_providers()
    assert prov["ghz_success"](2) == pytest.approx(1 / 8, abs=1e-10)
    assert prov["fusion_success"]() == pytest.approx(1 / 2, abs=1e-10)


def test_primate_cost_compositional_identity():
    for t in (0.1, 0.25, 0.5, 0.75, 0.9):
        closed = 64 * (1 + t * t) / (t - t * t)
        assert primate_photon_cost(t) == pytest.approx(closed, abs=1e-9)


def test_transmissivity_optimum():
    t_star, n_star = optimize_primate_transmissivity()
    assert t_star == pytest.approx(math.sqrt(2) - 1, abs=1e-8)
    assert n_star == pytest.approx(128 * (1 + math.sqrt(2)), rel=1e-6)
