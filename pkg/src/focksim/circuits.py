"""Passive linear-optical transfer matrices and exact Fock evolution.

Transfer matrices follow the column convention a_i^dag -> sum_j U[j,i] a_j^dag,
so a single-photon amplitude vector evolves as psi' = U psi. Diagram modes
index rows and columns 1-indexed top to bottom; "reflection" is the
mode-crossing amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .states import Occupation, PureState

UNITARITY_TOL = 1e-10
PERMANENT_MAX_DIM = 20


def check_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("transfer matrix must be square")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > tol:
        raise ValueError(f"matrix is not unitary (deviation {dev:.3g})")
    return u


def coupler_matrix(r: float) -> np.ndarray:
    """Real symmetric coupler [[sqrt(1-r), sqrt(r)], [sqrt(r), -sqrt(1-r)]]."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    t = math.sqrt(1.0 - r)
    s = math.sqrt(r)
    return check_unitary(np.array([[t, s], [s, -t]], dtype=complex))


def hadamard_matrix(m: int) -> np.ndarray:
    """Sylvester Hadamard H2^(tensor k), normalized by 1/sqrt(m)."""
    if m < 1 or m & (m - 1):
        raise ValueError("Hadamard dimension must be a power of two")
    h = np.array([[1.0]])
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    while h.shape[0] < m:
        h = np.kron(h2, h)
    return check_unitary(h / math.sqrt(m))


def dft_matrix(m: int) -> np.ndarray:
    """Unbiased multiport with entries omega^(jk)/sqrt(m), omega = exp(2 pi i/m)."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    j, k = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return check_unitary(np.exp(2j * np.pi * j * k / m) / math.sqrt(m))


def phase_matrix(phis: Sequence[float]) -> np.ndarray:
    return np.diag(np.exp(1j * np.asarray(phis, dtype=float)))


def mzi_switchable_coupler(r: float, on: bool) -> np.ndarray:
    """Mach-Zehnder realization of a switchable coupler.

    Two fixed couplers of reflectivity sin^2(arcsin(sqrt(r))/2) around a 0/pi
    phase. Off is the exact identity; on acts as a reflectivity-r coupler up
    to a global sign.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    s = math.sin(math.asin(math.sqrt(r)) / 2.0) ** 2
    c = coupler_matrix(s)
    phi = math.pi if on else 0.0
    return check_unitary(c @ phase_matrix([phi, 0.0]) @ c)


@dataclass(frozen=True)
class CircuitElement:
    """A small unitary acting on an ordered tuple of distinct 1-indexed modes."""

    matrix: np.ndarray
    modes: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "matrix", check_unitary(self.matrix))
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("element modes must be distinct")
        if self.matrix.shape[0] != len(self.modes):
            raise ValueError("matrix size does not match mode count")
        if any(m < 1 for m in self.modes):
            raise ValueError("mode indices are 1-based")


@dataclass
class Circuit:
    """Ordered element sequence on a fixed number of modes."""

    mode_count: int
    elements: list[CircuitElement] = field(default_factory=list)

    def _check(self, element: CircuitElement) -> CircuitElement:
        if max(element.modes) > self.mode_count:
            raise ValueError("element mode out of range")
        return element

    def add(self, matrix: np.ndarray, modes: Iterable[int], label: str = "") -> "Circuit":
        self.elements.append(self._check(CircuitElement(np.asarray(matrix, dtype=complex),
                                                        tuple(modes), label)))
        return self

    def coupler(self, i: int, j: int, r: float, label: str = "") -> "Circuit":
        return self.add(coupler_matrix(r), (i, j), label or f"coupler({r:g})")

    def phase(self, i: int, phi: float, label: str = "") -> "Circuit":
        return self.add(phase_matrix([phi]), (i,), label or f"phase({phi:g})")

    def switchable_coupler(self, i: int, j: int, r: float, on: bool) -> "Circuit":
        return self.add(mzi_switchable_coupler(r, on), (i, j),
                        f"mzi({r:g},{'on' if on else 'off'})")


def embed(u: np.ndarray, modes: Sequence[int], total_modes: int) -> np.ndarray:
    """Act as u on the listed modes (in order), identity elsewhere."""
    u = check_unitary(u)
    if len(set(modes)) != len(modes):
        raise ValueError("modes must be distinct")
    if max(modes) > total_modes or min(modes) < 1:
        raise ValueError("mode out of range")
    full = np.eye(total_modes, dtype=complex)
    idx = [m - 1 for m in modes]
    full[np.ix_(idx, idx)] = u
    return full


def compose(circuit: Circuit) -> np.ndarray:
    """Total transfer matrix; the first element of the circuit acts first."""
    total = np.eye(circuit.mode_count, dtype=complex)
    for el in circuit.elements:
        total = embed(el.matrix, el.modes, circuit.mode_count) @ total
    return check_unitary(total)


# --- exact Fock evolution ---------------------------------------------------

_FACT = [math.factorial(k) for k in range(40)]


def _apply_matrix(state: PureState, u: np.ndarray, modes: tuple[int, ...]) -> PureState:
    """Evolve the state through one element via multinomial expansion.

    Each occupied element-mode i contributes (sum_j U[j,i] a_j^dag)^n_i; the
    products are collected per output occupation with the usual sqrt(n!)
    normalization factors.
    """
    k = len(modes)
    idx = [m - 1 for m in modes]
    out: dict[Occupation, complex] = {}
    # cache expansions per local input occupation
    cache: dict[tuple[int, ...], dict[tuple[int, ...], complex]] = {}
    for occ, amp in state.amplitudes.items():
        local = tuple(occ[i] for i in idx)
        if local not in cache:
            cache[local] = _expand_local(u, local)
        for new_local, coeff in cache[local].items():
            new_occ = list(occ)
            for pos, i in enumerate(idx):
                new_occ[i] = new_local[pos]
            key = tuple(new_occ)
            out[key] = out.get(key, 0j) + amp * coeff
    return PureState(state.mode_count, out)


def _expand_local(u: np.ndarray, local: tuple[int, ...]) -> dict[tuple[int, ...], complex]:
    """Coefficients of |m> in U |local> for one element, both in local modes."""
    k = len(local)
    # polynomial in local creation operators: occupation tuple -> coefficient
    poly: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0j}
    for i, n_i in enumerate(local):
        if n_i == 0:
            continue
        col = u[:, i]
        for _ in range(n_i):
            nxt: dict[tuple[int, ...], complex] = {}
            for occ, c in poly.items():
                for j in range(k):
                    cj = col[j]
                    if cj == 0:
                        continue
                    new = list(occ)
                    new[j] += 1
                    key = tuple(new)
                    nxt[key] = nxt.get(key, 0j) + c * cj
            poly = nxt
    norm_in = math.sqrt(math.prod(_FACT[n] for n in local))
    return {occ: c * math.sqrt(math.prod(_FACT[n] for n in occ)) / norm_in
            for occ, c in poly.items()}


def apply_elementwise(circuit: Circuit, state: PureState) -> PureState:
    """Exact evolution, one element at a time, with amplitude pruning."""
    if state.mode_count != circuit.mode_count:
        raise ValueError("mode count mismatch")
    for el in circuit.elements:
        state = _apply_matrix(state, el.matrix, el.modes)
    return state


def apply_matrix(state: PureState, u: np.ndarray,
                 modes: Sequence[int] | None = None) -> PureState:
    """Evolve through a single unitary acting on the given modes (default all)."""
    if modes is None:
        modes = tuple(range(1, state.mode_count + 1))
    return _apply_matrix(state, check_unitary(u), tuple(modes))


# --- permanent-based oracle -------------------------------------------------

def permanent(m: np.ndarray) -> complex:
    """Permanent via Ryser's formula with Gray-code updates, O(2^n n)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("permanent requires a square matrix")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > PERMANENT_MAX_DIM:
        raise ValueError(f"permanent limited to n <= {PERMANENT_MAX_DIM}")
    row = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        j = (gray ^ new_gray).bit_length() - 1
        if new_gray & (1 << j):
            row += m[:, j]
        else:
            row -= m[:, j]
        gray = new_gray
        sign = -1.0 if gray.bit_count() & 1 else 1.0
        total += sign * np.prod(row)
    return ((-1.0) ** n) * total


def transition_amplitude(u: np.ndarray, occ_in: Occupation, occ_out: Occupation) -> complex:
    """<occ_out| U |occ_in> = per(U[rows=out, cols=in]) / sqrt(prod n! prod m!).

    Rows are repeated with output multiplicities, columns with input ones.
    Photon-number mismatch gives exact 0.
    """
    u = np.asarray(u, dtype=complex)
    if len(occ_in) != u.shape[1] or len(occ_out) != u.shape[0]:
        raise ValueError("occupation length does not match matrix dimension")
    n_tot = sum(occ_in)
    if n_tot != sum(occ_out):
        return 0j
    if n_tot == 0:
        return 1.0 + 0j
    cols = [i for i, n in enumerate(occ_in) for _ in range(n)]
    rows = [j for j, n in enumerate(occ_out) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    norm = math.sqrt(math.prod(_FACT[n] for n in occ_in)
                     * math.prod(_FACT[n] for n in occ_out))
    return permanent(sub) / norm
