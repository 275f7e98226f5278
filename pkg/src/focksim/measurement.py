"""Photon-number-resolving detection and output classification.

Detection is exact marginalization over occupation patterns on measured
modes. Effective operators collect the conditional maps induced by a
pattern; families of them can be checked for completeness on a declared
subspace. Residual states are classified against named reference states
up to the corrections a downstream consumer could apply: global phase,
per-mode pi phases, and permutations of the signal modes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .states import (DualRailPairing, Occupation, PureState, inner,
                     make_fock, reference_state)
from .circuits import transition_amplitude

COMPLETENESS_TOL = 1e-9
CLASSIFY_TOL = 1e-9


@dataclass(frozen=True)
class ConditionalOutcome:
    pattern: Occupation
    probability: float
    residual: PureState


@dataclass
class EffectiveOperator:
    """K = sum over transitions amp * |out><in| with an attached POVM weight."""

    weight: float
    transitions: dict[tuple[Occupation, Occupation], complex]
    label: str = ""
    in_modes: tuple[int, ...] = ()
    out_modes: tuple[int, ...] = ()

    def apply(self, amplitudes: dict[Occupation, complex]) -> dict[Occupation, complex]:
        out: dict[Occupation, complex] = {}
        for (o, i), amp in self.transitions.items():
            c = amplitudes.get(i)
            if c:
                out[o] = out.get(o, 0j) + amp * c
        return out

    def k_dagger_k(self, domain: Sequence[Occupation]) -> np.ndarray:
        """K^dag K on the domain basis: M[i,i'] = sum_o conj(K[o,i]) K[o,i']."""
        idx = {occ: k for k, occ in enumerate(domain)}
        rows: dict[Occupation, np.ndarray] = {}
        for (o, i), amp in self.transitions.items():
            if i not in idx:
                continue
            row = rows.setdefault(o, np.zeros(len(domain), dtype=complex))
            row[idx[i]] = amp
        m = np.zeros((len(domain), len(domain)), dtype=complex)
        for row in rows.values():
            m += np.outer(row.conj(), row)
        return m

    def bra_state(self) -> PureState:
        """For a pure bra (empty output occupations): the ket it projects onto."""
        if any(o != () for o, _ in self.transitions):
            raise ValueError("not a scalar-output bra")
        amps = {i: amp.conjugate() for (_, i), amp in self.transitions.items()}
        mode_count = len(next(iter(amps))) if amps else 0
        return PureState(mode_count, amps)


def enumerate_outcomes(s: PureState, measured_modes: Sequence[int]) -> list[ConditionalOutcome]:
    """All detection patterns with nonzero probability, lexicographic order.

    Residuals are normalized states on the unmeasured modes (ascending).
    """
    if not s.is_normalized():
        raise ValueError("enumerate_outcomes requires a normalized state")
    measured = tuple(measured_modes)
    keep = [m for m in range(1, s.mode_count + 1) if m not in measured]
    groups: dict[Occupation, dict[Occupation, complex]] = {}
    for occ, a in s.amplitudes.items():
        pat = tuple(occ[m - 1] for m in measured)
        rest = tuple(occ[m - 1] for m in keep)
        groups.setdefault(pat, {})[rest] = groups.get(pat, {}).get(rest, 0j) + a
    outcomes = []
    for pat in sorted(groups):
        amps = groups[pat]
        p = sum(abs(a) ** 2 for a in amps.values())
        if p <= 0:
            continue
        norm = math.sqrt(p)
        residual = PureState(len(keep), {occ: a / norm for occ, a in amps.items()})
        outcomes.append(ConditionalOutcome(pat, p, residual))
    return outcomes


def condition_on(s: PureState, measured_modes: Sequence[int],
                 pattern: Occupation) -> tuple[float, PureState]:
    """Probability and normalized residual for one pattern (0 and empty if impossible)."""
    measured = tuple(measured_modes)
    for out in enumerate_outcomes(s, measured):
        if out.pattern == tuple(pattern):
            return out.probability, out.residual
    keep = s.mode_count - len(measured)
    return 0.0, PureState(keep, {})


def occupations_with_total(mode_count: int, total: int) -> list[Occupation]:
    """All occupation tuples of a given length summing to total, lexicographic."""
    if mode_count == 0:
        return [()] if total == 0 else []
    out = []
    for first in range(total, -1, -1):
        for rest in occupations_with_total(mode_count - 1, total - first):
            out.append((first,) + rest)
    return sorted(out)


def backpropagate_effective_bra(u: np.ndarray, measured_modes: Sequence[int],
                                pattern: Occupation,
                                signal_truncation: Sequence[int] | None = None,
                                label: str = "") -> EffectiveOperator:
    """Effective operator for detecting `pattern` behind the interferometer u.

    Domain: occupations of u's input modes with the pattern's photon total,
    optionally truncated to <= 1 photon on the listed modes. When every mode
    is measured the result is a scalar-output bra.
    """
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    measured = tuple(measured_modes)
    pattern = tuple(pattern)
    if len(pattern) != len(measured):
        raise ValueError("pattern length must match measured modes")
    unmeasured = [mm for mm in range(1, m + 1) if mm not in measured]
    total = sum(pattern)
    transitions: dict[tuple[Occupation, Occupation], complex] = {}
    for occ_in in occupations_with_total(m, total):
        if signal_truncation and any(occ_in[mm - 1] > 1 for mm in signal_truncation):
            continue
        if not unmeasured:
            full_out = [0] * m
            for mm, n in zip(measured, pattern):
                full_out[mm - 1] = n
            amp = transition_amplitude(u, occ_in, tuple(full_out))
            if abs(amp) > 1e-14:
                transitions[((), occ_in)] = amp
        else:
            remaining = total - sum(pattern)
            for occ_rest in occupations_with_total(len(unmeasured), remaining):
                full_out = [0] * m
                for mm, n in zip(measured, pattern):
                    full_out[mm - 1] = n
                for mm, n in zip(unmeasured, occ_rest):
                    full_out[mm - 1] = n
                amp = transition_amplitude(u, occ_in, tuple(full_out))
                if abs(amp) > 1e-14:
                    transitions[(occ_rest, occ_in)] = amp
    return EffectiveOperator(1.0, transitions, label or f"m{pattern}",
                             in_modes=tuple(range(1, m + 1)),
                             out_modes=tuple(unmeasured))


def verify_completeness(family: Iterable[EffectiveOperator],
                        subspace: Sequence[Occupation]) -> float:
    """Max deviation of sum_i w_i K_i^dag K_i from the identity on the subspace."""
    domain = list(subspace)
    m = np.zeros((len(domain), len(domain)), dtype=complex)
    for op in family:
        m += op.weight * op.k_dagger_k(domain)
    return float(np.max(np.abs(m - np.eye(len(domain)))))


# --- classification ---------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    label: str
    fidelity: float
    # correction applied to the input to reach the canonical reference:
    # permutation maps canonical position k to input position permutation[k]
    permutation: tuple[int, ...] = ()
    phase_mask: tuple[int, ...] = ()   # entries 0/1, 1 = pi phase on that mode
    global_phase: complex = 1.0 + 0j
    tier: int = 0


def restrict_to_modes(s: PureState, modes: Sequence[int]) -> PureState:
    """Project out other modes, requiring them to be vacuum in every term."""
    modes = tuple(modes)
    other = [m for m in range(1, s.mode_count + 1) if m not in modes]
    amps = {}
    for occ, a in s.amplitudes.items():
        if any(occ[m - 1] != 0 for m in other):
            raise ValueError(f"photons outside the listed modes in {occ}")
        amps[tuple(occ[m - 1] for m in modes)] = a
    return PureState(len(modes), amps)


def permute_modes(s: PureState, order: Sequence[int]) -> PureState:
    """Reorder modes so new mode k is old mode order[k] (1-indexed)."""
    order = tuple(order)
    return PureState(len(order),
                     {tuple(occ[m - 1] for m in order): a
                      for occ, a in s.amplitudes.items()})


def apply_phase_mask(s: PureState, mask: Sequence[int]) -> PureState:
    """Multiply each term by (-1)^(photons on masked modes)."""
    return PureState(s.mode_count,
                     {occ: a * (-1.0) ** sum(n for n, b in zip(occ, mask) if b)
                      for occ, a in s.amplitudes.items()})


def _match(s: PureState, ref: PureState) -> tuple[float, complex]:
    ov = inner(ref, s)
    return abs(ov) ** 2, ov


def orbit_fidelity(s: PureState, ref: PureState,
                   max_tier: int = 3) -> tuple[float, Classification]:
    """Best fidelity of s to ref over the correction orbit, searched in tiers.

    Tier 1: global phase only. Tier 2: adds per-mode pi phases. Tier 3: adds
    permutations of all modes. Stops at the first tier reaching 1 - tol.
    """
    m = s.mode_count
    identity = tuple(range(1, m + 1))
    best = (-1.0, Classification("", 0.0))

    def consider(fid: float, ov: complex, perm, mask, tier) -> bool:
        nonlocal best
        if fid > best[0]:
            gp = ov / abs(ov) if abs(ov) > 0 else 1.0 + 0j
            best = (fid, Classification("", fid, tuple(perm), tuple(mask), gp, tier))
        return fid >= 1.0 - CLASSIFY_TOL

    fid, ov = _match(s, ref)
    if consider(fid, ov, identity, (0,) * m, 1) and max_tier >= 1:
        return best
    if max_tier >= 2:
        for mask in itertools.product((0, 1), repeat=m - 1):
            mask = (0,) + mask  # global sign handled by the phase factor
            fid, ov = _match(apply_phase_mask(s, mask), ref)
            if consider(fid, ov, identity, mask, 2):
                return best
    if max_tier >= 3:
        for perm in itertools.permutations(identity):
            if perm == identity:
                continue
            sp = permute_modes(s, perm)
            for mask in itertools.product((0, 1), repeat=m - 1):
                mask = (0,) + mask
                fid, ov = _match(apply_phase_mask(sp, mask), ref)
                if consider(fid, ov, perm, mask, 3):
                    return best
    return best


def _rail_swap_orbit(s: PureState, ref: PureState, pairs: int) -> tuple[float, Classification]:
    """Orbit of per-pair rail swaps plus per-mode pi phases (GHZ classes)."""
    m = s.mode_count
    best = (-1.0, Classification("", 0.0))
    for swaps in itertools.product((0, 1), repeat=pairs):
        order = []
        for k, sw in enumerate(swaps):
            a, b = 2 * k + 1, 2 * k + 2
            order += [b, a] if sw else [a, b]
        sp = permute_modes(s, order)
        for mask in itertools.product((0, 1), repeat=m - 1):
            mask = (0,) + mask
            fid, ov = _match(apply_phase_mask(sp, mask), ref)
            if fid > best[0]:
                gp = ov / abs(ov) if abs(ov) > 0 else 1.0 + 0j
                best = (fid, Classification("", fid, tuple(order), tuple(mask), gp, 2))
            if best[0] >= 1.0 - CLASSIFY_TOL:
                return best
    return best


def _is_product(s: PureState, split: int) -> bool:
    """Schmidt rank 1 across modes [1..split] | [split+1..end]."""
    left_keys, right_keys = {}, {}
    entries = []
    for occ, a in s.amplitudes.items():
        l, r = occ[:split], occ[split:]
        li = left_keys.setdefault(l, len(left_keys))
        ri = right_keys.setdefault(r, len(right_keys))
        entries.append((li, ri, a))
    m = np.zeros((len(left_keys), len(right_keys)), dtype=complex)
    for li, ri, a in entries:
        m[li, ri] = a
    sv = np.linalg.svd(m, compute_uv=False)
    return bool(sv[0] ** 2 >= 1.0 - CLASSIFY_TOL)


_TWO_QUBIT_REFS = ("phi-minus", "psi-minus", "chi-minus", "chi-plus", "w42")
_REF_LABELS = {"w42": "w-type"}


def classify_residual(s: PureState, pairing: DualRailPairing) -> Classification:
    """Label a residual against the reference classes for this pairing.

    The state is first brought to the pairing's canonical mode layout
    (pair k on modes 2k-1, 2k); other modes must be vacuum. Two-pair states
    are matched against the Bell and W references, larger pairings against
    the GHZ class; anything else falls through to product or other.
    """
    if not s.is_normalized():
        raise ValueError("classification requires a normalized state")
    try:
        canon = restrict_to_modes(s, pairing.modes)
    except ValueError:
        return Classification("other", 0.0)
    n_pairs = len(pairing.pairs)
    if n_pairs == 2 and canon.total_photons() == {2}:
        # Permutations merge the Bell classes, so search phases-only for every
        # reference before allowing permuted matches.
        for tier in (2, 3):
            for name in _TWO_QUBIT_REFS:
                fid, cls = orbit_fidelity(canon, reference_state(name), max_tier=tier)
                if fid >= 1.0 - CLASSIFY_TOL:
                    label = _REF_LABELS.get(name, name)
                    return Classification(label, fid, cls.permutation, cls.phase_mask,
                                          cls.global_phase, cls.tier)
    if canon.total_photons() == {n_pairs}:
        ref = reference_state("ghz", n=n_pairs)
        fid, cls = _rail_swap_orbit(canon, ref, n_pairs)
        if fid >= 1.0 - CLASSIFY_TOL:
            return Classification("ghz", fid, cls.permutation, cls.phase_mask,
                                  cls.global_phase, cls.tier)
    if len(canon.amplitudes) > 0 and _is_product(canon, 2 * (n_pairs // 2)):
        return Classification("product", 1.0)
    return Classification("other", 0.0)
