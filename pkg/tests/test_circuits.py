import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focksim.circuits import (
    Circuit, apply_elementwise, apply_matrix, check_unitary, compose,
    coupler_matrix, dft_matrix, hadamard_matrix, mzi_switchable_coupler,
    permanent, phase_matrix, transition_amplitude)
from focksim.measurement import occupations_with_total
from focksim.states import make_fock


def test_coupler_matrix_values():
    u = coupler_matrix(0.5)
    s = 1 / math.sqrt(2)
    assert np.allclose(u, [[s, s], [s, -s]])
    r = 0.3
    u = coupler_matrix(r)
    assert u[0, 0] == pytest.approx(math.sqrt(1 - r))
    assert u[1, 0] == pytest.approx(math.sqrt(r))
    assert u[1, 1] == pytest.approx(-math.sqrt(1 - r))


def test_hadamard_matrix():
    h = hadamard_matrix(4)
    assert np.allclose(h @ h.conj().T, np.eye(4))
    assert np.allclose(np.abs(h), 0.5)
    with pytest.raises(ValueError):
        hadamard_matrix(3)


def test_dft_matrix_convention():
    u = dft_matrix(3)
    assert np.allclose(u @ u.conj().T, np.eye(3))
    # positive-frequency convention: entry (1,1) is exp(+2 pi i/3)/sqrt(3)
    assert u[1, 1] == pytest.approx(np.exp(2j * np.pi / 3) / math.sqrt(3))


def test_phase_and_switchable_coupler():
    assert np.allclose(phase_matrix([0.0, np.pi]), np.diag([1.0, -1.0]))
    off = mzi_switchable_coupler(0.5, on=False)
    assert np.allclose(np.abs(off), np.abs(np.eye(2)))
    on = mzi_switchable_coupler(0.5, on=True)
    assert abs(on[1, 0]) == pytest.approx(math.sqrt(0.5))


def test_check_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        check_unitary(np.array([[1.0, 0.0], [0.0, 2.0]]))


def test_permanent_small_cases():
    assert permanent(np.array([[3.0 + 1j]])) == pytest.approx(3.0 + 1j)
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert permanent(m) == pytest.approx(1 * 4 + 2 * 3)
    for n in (2, 3, 4):
        assert permanent(np.ones((n, n))) == pytest.approx(math.factorial(n))


def test_compose_equals_elementwise():
    c = Circuit(3)
    c.coupler(1, 2, 0.3).phase(2, 0.7).coupler(2, 3, 0.6)
    u = compose(c)
    s = make_fock((1, 1, 0))
    assert np.allclose(u @ u.conj().T, np.eye(3))
    via_elementwise = apply_elementwise(c, s)
    via_matrix = apply_matrix(s, u)
    for occ in occupations_with_total(3, 2):
        a = via_elementwise.amplitudes.get(occ, 0j)
        b = via_matrix.amplitudes.get(occ, 0j)
        assert abs(a - b) < 1e-12


def test_circuit_rejects_bad_modes():
    c = Circuit(2)
    with pytest.raises(ValueError):
        c.coupler(1, 3, 0.5)
    with pytest.raises(ValueError):
        c.coupler(1, 1, 0.5)


@st.composite
def random_circuits(draw):
    modes = draw(st.integers(2, 4))
    c = Circuit(modes)
    for _ in range(draw(st.integers(1, 5))):
        kind = draw(st.sampled_from(["coupler", "phase"]))
        if kind == "coupler":
            pair = draw(st.permutations(range(1, modes + 1)))[:2]
            c.coupler(pair[0], pair[1], draw(st.floats(0.05, 0.95)))
        else:
            c.phase(draw(st.integers(1, modes)), draw(st.floats(0, 2 * math.pi)))
    occ = tuple(draw(st.integers(0, 2)) for _ in range(modes))
    return c, occ


@settings(max_examples=40, deadline=None)
@given(random_circuits())
def test_evolution_preserves_norm(case):
    c, occ = case
    if sum(occ) == 0:
        occ = (1,) + occ[1:]
    s = apply_elementwise(c, make_fock(occ))
    assert s.norm_squared() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(random_circuits())
def test_elementwise_matches_permanent(case):
    c, occ = case
    if sum(occ) == 0:
        occ = (1,) + occ[1:]
    u = compose(c)
    s = apply_elementwise(c, make_fock(occ))
    for occ_out in occupations_with_total(c.mode_count, sum(occ)):
        amp = transition_amplitude(u, occ, occ_out)
        assert abs(amp - s.amplitudes.get(occ_out, 0j)) < 1e-10
