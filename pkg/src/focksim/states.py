"""Sparse multimode Fock-state algebra.

States are dictionaries mapping occupation tuples to complex amplitudes.
Modes are 1-indexed everywhere in the public API, matching the circuit
diagrams (top row = mode 1). Dual-rail qubits use |0> <-> |10> and
|1> <-> |01> on an ordered mode pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

Occupation = tuple[int, ...]

# Amplitudes below this magnitude are dropped after each elementary operation.
PRUNE_TOL = 1e-13
NORM_TOL = 1e-10


class NotAQubitState(ValueError):
    """Raised when decoding a state holding a photon count != 1 on some pair."""


class InvalidOccupation(ValueError):
    pass


@dataclass(frozen=True)
class DualRailPairing:
    """Ordered, disjoint (modeA, modeB) pairs defining dual-rail qubits."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        flat = [m for p in self.pairs for m in p]
        if len(set(flat)) != len(flat):
            raise ValueError("dual-rail pairs must be disjoint")
        if any(m < 1 for m in flat):
            raise ValueError("mode indices are 1-based")

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(m for p in self.pairs for m in p)


class PureState:
    """Sparse pure state: occupation tuple -> complex amplitude."""

    __slots__ = ("mode_count", "amplitudes")

    def __init__(self, mode_count: int, amplitudes: Mapping[Occupation, complex],
                 prune: bool = True):
        self.mode_count = mode_count
        amps: dict[Occupation, complex] = {}
        for occ, a in amplitudes.items():
            if len(occ) != mode_count:
                raise InvalidOccupation(f"occupation {occ} has wrong length")
            if any(n < 0 for n in occ):
                raise InvalidOccupation(f"negative entry in {occ}")
            if prune and abs(a) < PRUNE_TOL:
                continue
            if a != 0:
                amps[tuple(occ)] = complex(a)
        self.amplitudes = amps

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def normalized(self) -> "PureState":
        n = math.sqrt(self.norm_squared())
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return PureState(self.mode_count,
                         {occ: a / n for occ, a in self.amplitudes.items()})

    def scaled(self, c: complex) -> "PureState":
        return PureState(self.mode_count,
                         {occ: a * c for occ, a in self.amplitudes.items()})

    def total_photons(self) -> set[int]:
        return {sum(occ) for occ in self.amplitudes}

    def __add__(self, other: "PureState") -> "PureState":
        if self.mode_count != other.mode_count:
            raise ValueError("mode count mismatch")
        amps = dict(self.amplitudes)
        for occ, a in other.amplitudes.items():
            amps[occ] = amps.get(occ, 0j) + a
        return PureState(self.mode_count, amps)

    def __repr__(self) -> str:
        terms = sorted(self.amplitudes.items())
        inner = " + ".join(f"({a:.4g})|{''.join(map(str, occ))}>" for occ, a in terms[:8])
        if len(terms) > 8:
            inner += f" + ... ({len(terms)} terms)"
        return f"PureState({self.mode_count} modes, {inner})"


def make_fock(occ: Iterable[int]) -> PureState:
    """Basis state |occ> with amplitude 1."""
    occ = tuple(occ)
    if any(n < 0 for n in occ):
        raise InvalidOccupation(f"negative entry in {occ}")
    return PureState(len(occ), {occ: 1.0 + 0j})


def vacuum(mode_count: int) -> PureState:
    return make_fock((0,) * mode_count)


def tensor(a: PureState, b: PureState) -> PureState:
    amps = {}
    for oa, ca in a.amplitudes.items():
        for ob, cb in b.amplitudes.items():
            amps[oa + ob] = ca * cb
    return PureState(a.mode_count + b.mode_count, amps)


def inner(a: PureState, b: PureState) -> complex:
    """<a|b>. Iterates the smaller support."""
    if a.mode_count != b.mode_count:
        raise ValueError("mode count mismatch")
    if len(b.amplitudes) < len(a.amplitudes):
        return complex(inner(b, a)).conjugate()
    return sum(ca.conjugate() * b.amplitudes.get(occ, 0j)
               for occ, ca in a.amplitudes.items())


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for normalized states (global-phase insensitive)."""
    if not a.is_normalized() or not b.is_normalized():
        raise ValueError("fidelity requires normalized states")
    return abs(inner(a, b)) ** 2


# --- reference states -------------------------------------------------------

def _bell_like(occ1: Occupation, occ2: Occupation, sign: int) -> PureState:
    s = 1 / math.sqrt(2)
    return PureState(4, {occ1: s, occ2: sign * s})


def reference_state(name: str, *, n: int | None = None, lam: float | None = None,
                    sign: str = "-") -> PureState:
    """Named reference states on their conventional mode layouts.

    phi-minus, psi-minus, chi-minus, chi-plus, w42: two photons on 4 modes
    (dual-rail pairs (1,2),(3,4) where applicable). single-rail-bell: one
    photon on 2 modes. ghz: requires n, lives on 2n modes. primate:
    requires n, lam, sign; lives on 2n modes with an all-vacuum placeholder
    for the inner dead branch.
    """
    if name == "phi-minus":
        return _bell_like((1, 0, 1, 0), (0, 1, 0, 1), -1)
    if name == "psi-minus":
        return _bell_like((1, 0, 0, 1), (0, 1, 1, 0), -1)
    if name == "chi-minus":
        return _bell_like((1, 1, 0, 0), (0, 0, 1, 1), -1)
    if name == "chi-plus":
        return _bell_like((1, 1, 0, 0), (0, 0, 1, 1), +1)
    if name == "w42":
        s = 1 / math.sqrt(6)
        occs = [(1, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1),
                (0, 1, 1, 0), (0, 1, 0, 1), (0, 0, 1, 1)]
        return PureState(4, {occ: s for occ in occs})
    if name == "single-rail-bell":
        s = 1 / math.sqrt(2)
        return PureState(2, {(1, 0): s, (0, 1): s})
    if name == "ghz":
        if n is None or n < 1:
            raise ValueError("ghz requires n >= 1")
        s = 1 / math.sqrt(2)
        return PureState(2 * n, {(1, 0) * n: s, (0, 1) * n: s})
    if name == "primate":
        return _primate(n, lam, sign)
    raise ValueError(f"unknown reference state {name!r}")


def _primate(n: int | None, lam: float | None, sign: str) -> PureState:
    if n is None or n < 1:
        raise ValueError("primate requires n >= 1")
    if lam is None or not 0.0 <= lam <= 1.0:
        raise ValueError("primate requires lam in [0, 1]")
    if sign not in ("+", "-"):
        raise ValueError("primate sign must be '+' or '-'")
    sgn = 1 if sign == "+" else -1
    # sqrt(lam) * (|2>|01>^(n-1)|0> +/- |0>|10>^(n-1)|2>)/sqrt(2)
    #   + sqrt(1-lam) * |0>|zeta>|0>, with |zeta> standing in as inner vacuum.
    left = (2,) + (0, 1) * (n - 1) + (0,)
    right = (0,) + (1, 0) * (n - 1) + (2,)
    amps: dict[Occupation, complex] = {}
    s = math.sqrt(lam / 2)
    if s:
        amps[left] = s
        amps[right] = sgn * s
    dead = math.sqrt(1 - lam)
    if dead:
        zero = (0,) * (2 * n)
        amps[zero] = amps.get(zero, 0j) + dead
    return PureState(2 * n, amps)


# --- dual-rail encoding -----------------------------------------------------

def encode_dual_rail(qubit_amplitudes: Iterable[complex],
                     pairing: DualRailPairing,
                     total_modes: int | None = None) -> PureState:
    """Map 2^k qubit amplitudes onto dual-rail Fock occupations.

    Amplitude index bit order: first pair is the most significant bit.
    Modes outside the pairing (if total_modes is larger) are vacuum.
    """
    amps_in = list(qubit_amplitudes)
    k = len(pairing.pairs)
    if len(amps_in) != 2 ** k:
        raise ValueError(f"expected {2 ** k} amplitudes, got {len(amps_in)}")
    if total_modes is None:
        total_modes = max(pairing.modes)
    if max(pairing.modes) > total_modes:
        raise ValueError("pairing exceeds mode count")
    amps: dict[Occupation, complex] = {}
    for idx, c in enumerate(amps_in):
        if c == 0:
            continue
        occ = [0] * total_modes
        for q, (ma, mb) in enumerate(pairing.pairs):
            bit = (idx >> (k - 1 - q)) & 1
            occ[(mb if bit else ma) - 1] = 1
        amps[tuple(occ)] = complex(c)
    return PureState(total_modes, amps)


def decode_dual_rail(s: PureState, pairing: DualRailPairing) -> list[complex]:
    """Inverse of encode_dual_rail; raises NotAQubitState off the qubit subspace.

    Modes outside the pairing must be vacuum in every term.
    """
    k = len(pairing.pairs)
    if max(pairing.modes) > s.mode_count:
        raise ValueError("pairing exceeds mode count")
    outside = [m for m in range(1, s.mode_count + 1) if m not in pairing.modes]
    out = [0j] * (2 ** k)
    for occ, a in s.amplitudes.items():
        if any(occ[m - 1] != 0 for m in outside):
            raise NotAQubitState(f"photons outside the pairing in {occ}")
        idx = 0
        for ma, mb in pairing.pairs:
            na, nb = occ[ma - 1], occ[mb - 1]
            if (na, nb) == (1, 0):
                bit = 0
            elif (na, nb) == (0, 1):
                bit = 1
            else:
                raise NotAQubitState(f"pair ({ma},{mb}) holds {na}+{nb} photons")
            idx = (idx << 1) | bit
        out[idx] = a
    return out


def truncate_to_qubit_subspace(s: PureState, modes: Iterable[int]) -> PureState:
    """Drop every term with occupation >= 2 on any listed mode. Idempotent."""
    modes = tuple(modes)
    amps = {occ: a for occ, a in s.amplitudes.items()
            if all(occ[m - 1] <= 1 for m in modes)}
    return PureState(s.mode_count, amps)
