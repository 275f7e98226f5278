import math

import numpy as np
import pytest

from focksim.circuits import dft_matrix, hadamard_matrix
from focksim.measurement import (
    backpropagate_effective_bra, classify_residual, condition_on,
    enumerate_outcomes, occupations_with_total, apply_phase_mask,
    permute_modes, restrict_to_modes, verify_completeness)
from focksim.states import (
    DualRailPairing, PureState, make_fock, reference_state, tensor, vacuum)

PAIRING = DualRailPairing(((1, 2), (3, 4)))
SQ2 = 1 / math.sqrt(2)


def test_occupations_with_total_counts():
    assert len(occupations_with_total(4, 2)) == 10  # C(2+3, 3)
    assert occupations_with_total(2, 0) == [(0, 0)]
    assert set(occupations_with_total(2, 1)) == {(1, 0), (0, 1)}


def test_enumerate_outcomes_partitions_probability():
    s = PureState(3, {(1, 0, 1): SQ2, (0, 1, 1): SQ2})
    outcomes = enumerate_outcomes(s, (3,))
    assert len(outcomes) == 1
    assert outcomes[0].pattern == (1,)
    assert outcomes[0].probability == pytest.approx(1.0)
    assert outcomes[0].residual.mode_count == 2
    outcomes = enumerate_outcomes(s, (1,))
    probs = {o.pattern: o.probability for o in outcomes}
    assert probs[(1,)] == pytest.approx(0.5)
    assert probs[(0,)] == pytest.approx(0.5)
    assert sum(probs.values()) == pytest.approx(1.0)
    for o in outcomes:
        assert o.residual.is_normalized()


def test_condition_on_known_pattern():
    s = PureState(2, {(2, 0): 0.6, (1, 1): 0.8})
    p, residual = condition_on(s, (2,), (1,))
    assert p == pytest.approx(0.64)
    assert residual.amplitudes[(1,)] == pytest.approx(1.0)


def test_condition_on_impossible_pattern():
    s = make_fock((1, 0))
    p, residual = condition_on(s, (2,), (3,))
    assert p == 0.0
    assert residual.amplitudes == {}


def test_backpropagated_families_are_complete():
    for u, photons in ((hadamard_matrix(4), 2), (dft_matrix(3), 1)):
        m = u.shape[0]
        subspace = occupations_with_total(m, photons)
        ops = [backpropagate_effective_bra(u, tuple(range(1, m + 1)), pattern)
               for pattern in subspace]
        assert verify_completeness(ops, subspace) < 1e-12


def test_effective_operator_weight_matches_probability():
    u = hadamard_matrix(2)
    op = backpropagate_effective_bra(u, (1, 2), (1, 1))
    domain = occupations_with_total(2, 2)
    kk = op.k_dagger_k(domain)
    # detecting (1,1) behind a 50:50 from |11> is the suppressed outcome
    idx = domain.index((1, 1))
    assert kk[idx, idx] == pytest.approx(0.0, abs=1e-12)
    assert np.trace(kk).real == pytest.approx(1.0)


def test_classify_references_fixed_point():
    for name, label in (("phi-minus", "phi-minus"), ("psi-minus", "psi-minus"),
                        ("chi-minus", "chi-minus"), ("w42", "w-type")):
        cls = classify_residual(reference_state(name), PAIRING)
        assert cls.label == label
        assert cls.fidelity == pytest.approx(1.0)
        assert cls.tier == 1  # matched by a global phase alone


def test_classify_merges_chi_plus_into_chi_minus():
    # a pi phase on one rail maps chi-plus to chi-minus, so under phase
    # corrections they are one class and the first listed reference wins
    cls = classify_residual(reference_state("chi-plus"), PAIRING)
    assert cls.label == "chi-minus"
    assert cls.fidelity == pytest.approx(1.0)
    assert cls.tier == 2


def test_classify_recognizes_phase_variants():
    s = apply_phase_mask(reference_state("phi-minus"), (0, 1, 0, 0))
    cls = classify_residual(s, PAIRING)
    assert cls.label in ("phi-minus", "psi-minus", "chi-minus", "chi-plus")
    assert cls.fidelity == pytest.approx(1.0)
    assert cls.tier == 2  # needs a pi-phase correction


def test_classify_product_and_other():
    product = make_fock((1, 0, 0, 1))
    assert classify_residual(product, PAIRING).label == "product"
    lopsided = PureState(4, {(2, 0, 0, 0): SQ2, (0, 0, 1, 1): SQ2})
    assert classify_residual(lopsided, PAIRING).label == "other"


def test_classify_ghz_pairing():
    pairing = DualRailPairing(((1, 2), (3, 4), (5, 6)))
    cls = classify_residual(reference_state("ghz", n=3), pairing)
    assert cls.label == "ghz"
    assert cls.fidelity == pytest.approx(1.0)


def test_classify_requires_normalized_input():
    with pytest.raises(ValueError):
        classify_residual(make_fock((1, 0, 1, 0)).scaled(0.5), PAIRING)


def test_restrict_and_permute():
    s = tensor(reference_state("phi-minus"), vacuum(2))
    cut = restrict_to_modes(s, (1, 2, 3, 4))
    assert cut.mode_count == 4
    assert classify_residual(cut, PAIRING).label == "phi-minus"
    with pytest.raises(ValueError):
        restrict_to_modes(make_fock((0, 1)), (1,))  # photon outside kept modes
    swapped = permute_modes(make_fock((1, 0)), (2, 1))
    assert swapped.amplitudes == {(0, 1): 1.0 + 0j}
