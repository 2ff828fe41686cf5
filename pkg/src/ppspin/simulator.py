"""Statevector engine: diagonal phase layers, transverse mixer layers, readout.

Amplitudes are stored as a dense complex128 array over all 2^N basis states;
basis index bit b is variable b (LSB = variable 0, bit value 0 <-> Z = +1).
Diagonal cost tables are precomputed once per (instance, fold, lowering)
combination and reused across every time step, so a protocol step costs
O(2^N) instead of O(2^N * N_C).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .instances import Instance, ParameterError, hamming_distance

DEFAULT_QUBIT_CAP = 26  # 2^26 complex128 amplitudes = 1 GiB


class ResourceError(RuntimeError):
    pass


@dataclass
class StateVector:
    n_qubits: int
    amp: np.ndarray  # shape (2**n_qubits,), complex128

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.amp.real**2 + self.amp.imag**2)))

    def probabilities(self) -> np.ndarray:
        return self.amp.real**2 + self.amp.imag**2


@dataclass
class DiagonalTable:
    values: np.ndarray  # shape (2**N,), float64
    label: str  # problem | folded_linear | folded_quadratic | lowering


@dataclass
class MeasureStats:
    q_grid: tuple
    energy_mass: np.ndarray  # P(E <= q * E_GS) per q
    d_grid: tuple
    hamming_mass: np.ndarray  # P(D_H(m, G) <= d * N) per d
    expected_energy: float

    @property
    def p_gs(self) -> float:
        """Mass on the planted string itself (Hamming band d = 0)."""
        for i, d in enumerate(self.d_grid):
            if d == 0:
                return float(self.hamming_mass[i])
        raise KeyError("d = 0 band not present")


def init_state(N: int, kind: str = "uniform", m: int = 0,
               cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """kind 'uniform': H_D ground state (all amplitudes 2^{-N/2});
    kind 'basis': single basis state |m>."""
    if N > cap:
        raise ResourceError(f"N={N} exceeds qubit cap {cap} "
                            f"({2**N * 16 / 2**30:.1f} GiB of amplitudes)")
    dim = 1 << N
    amp = np.zeros(dim, dtype=np.complex128)
    if kind == "uniform":
        amp[:] = 2.0 ** (-N / 2.0)
    elif kind == "basis":
        amp[m] = 1.0
    else:
        raise ParameterError(f"unknown init kind {kind!r}")
    return StateVector(n_qubits=N, amp=amp)


def problem_energies(inst: Instance) -> np.ndarray:
    """Normalized problem energy for every basis state, vectorized per constraint."""
    N = inst.n_vars
    dim = 1 << N
    idx = np.arange(dim, dtype=np.uint64)
    masks, signs = inst.packed()
    e_raw = np.zeros(dim, dtype=np.float64)
    for mask, sign in zip(masks, signs):
        parity = np.bitwise_count(idx & mask).astype(np.int8) & 1
        # satisfied (sign * (-1)^parity = +1) contributes -1
        e_raw -= sign * (1 - 2 * parity)
    return inst.scale * e_raw


def lowering_energies(inst: Instance, lowering) -> np.ndarray:
    """Raw lowering-Hamiltonian energies; global minimum at the anchor L.

    xor3: the instance's triples re-signed so L satisfies all of them
    (minimum -N_C).  local_z: h_j = -Z_j(L) Z_j (minimum -N).
    """
    N = inst.n_vars
    dim = 1 << N
    idx = np.arange(dim, dtype=np.uint64)
    L = lowering.anchor
    if lowering.kind == "xor3":
        masks, _ = inst.packed()
        e = np.zeros(dim, dtype=np.float64)
        for mask in masks:
            parity = np.bitwise_count(idx & mask).astype(np.int8) & 1
            parity_L = int(np.bitwise_count(np.uint64(L) & mask)) & 1
            sign = 1 - 2 * parity_L  # chosen so L satisfies the constraint
            e -= sign * (1 - 2 * parity)
        return e
    elif lowering.kind == "local_z":
        dist = np.bitwise_count(idx ^ np.uint64(L)).astype(np.float64)
        return -(N - 2.0 * dist)
    raise ParameterError(f"unknown lowering kind {lowering.kind!r}")


def build_diagonal(inst: Instance, kind: str, A: Optional[float] = None,
                   lowering=None) -> DiagonalTable:
    """kind 'problem' | 'folded_linear' | 'folded_quadratic' | 'lowering'.

    Folded tables are non-negative with zero exactly on the fold E = -A*N:
    linear |E + A*N| / A, quadratic (E + A*N)^2 / (A^2 * N).
    """
    if kind == "problem":
        return DiagonalTable(problem_energies(inst), "problem")
    if kind == "lowering":
        if lowering is None:
            raise ParameterError("lowering table requires a LoweringHamiltonian")
        return DiagonalTable(lowering_energies(inst, lowering), "lowering")
    if A is None or A <= 0:
        raise ParameterError(f"fold target A must be positive, got {A}")
    N = inst.n_vars
    e = problem_energies(inst)
    if kind == "folded_linear":
        return DiagonalTable(np.abs(e + A * N) / A, "folded_linear")
    if kind == "folded_quadratic":
        return DiagonalTable((e + A * N) ** 2 / (A * A * N), "folded_quadratic")
    raise ParameterError(f"unknown diagonal kind {kind!r}")


def apply_phase(state: StateVector, table: DiagonalTable, angle: float) -> StateVector:
    """psi_m *= exp(-i * angle * table_m), in place."""
    if table.values.shape[0] != state.amp.shape[0]:
        raise ParameterError("table length does not match state dimension")
    state.amp *= np.exp(-1j * angle * table.values)
    return state


def apply_mixer(state: StateVector, angle: float) -> StateVector:
    """Apply exp(+i * angle * X_j) on every qubit j (driver layer for H_D = -sum X)."""
    c = np.cos(angle)
    s = 1j * np.sin(angle)
    N = state.n_qubits
    amp = state.amp
    for j in range(N):
        view = amp.reshape(-1, 2, 1 << j)
        a = view[:, 0, :].copy()
        b = view[:, 1, :]
        view[:, 0, :] = c * a + s * b
        view[:, 1, :] = s * a + c * b
    return state


def measure_stats(state: StateVector, inst: Instance,
                  q_grid: Sequence[float], d_grid: Sequence[float],
                  table: Optional[DiagonalTable] = None) -> MeasureStats:
    """Exact probability masses (no shot sampling).

    energy_mass[i] = P(E <= q_i * E_GS) with E_GS = -N;
    hamming_mass[i] = P(D_H(m, G) <= d_i * N).
    """
    if inst.planted is None:
        raise ParameterError("measure_stats needs the planted string")
    N = inst.n_vars
    probs = state.probabilities()
    energies = table.values if table is not None and table.label == "problem" \
        else problem_energies(inst)
    e_gs = -float(N)

    energy_mass = np.empty(len(q_grid))
    for i, q in enumerate(q_grid):
        energy_mass[i] = probs[energies <= q * e_gs + 1e-9].sum()

    idx = np.arange(1 << N, dtype=np.uint64)
    dist = np.bitwise_count(idx ^ np.uint64(inst.planted))
    hamming_mass = np.empty(len(d_grid))
    for i, d in enumerate(d_grid):
        hamming_mass[i] = probs[dist <= d * N + 1e-9].sum()

    return MeasureStats(q_grid=tuple(q_grid), energy_mass=energy_mass,
                        d_grid=tuple(d_grid), hamming_mass=hamming_mass,
                        expected_energy=float(probs @ energies))
