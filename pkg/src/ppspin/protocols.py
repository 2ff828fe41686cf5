"""QAOA, spectrally folded AQC, and trial minimum annealing schedules.

All three protocols are Trotterized with the same 2*pi phase convention: per
step of length dt at (left-endpoint) time t the state receives

    exp(-i * 2*pi * g(t) * dt * H_diag)  then  exp(+i * 2*pi * f(t) * dt * sum_j X_j)

(the positive mixer sign because the driver is H_D = -sum_j X_j).  QAOA uses
g = sqrt(t/t_f), f = sqrt(1 - t/t_f) on the problem diagonal; fold-AQC keeps
g but flattens the mixer turn-off to f = (1 - t/t_f)^(1/4) on a folded
diagonal; TMA runs at constant diagonal weight with a kappa(t) mixer ramp and
a lowering term C(t) * H_L that is released to zero during the main stage.

Runtime averaging evaluates the protocol on a deterministic multiplier grid
spanning [2/3, 4/3] of the nominal runtime and averages the measured masses;
grid size 1 degenerates to the single multiplier 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .instances import Instance, ParameterError
from .simulator import (
    DiagonalTable,
    StateVector,
    apply_mixer,
    apply_phase,
    build_diagonal,
    init_state,
    measure_stats,
)

TWO_PI = 2.0 * math.pi

PROTOCOL_KINDS = ("qaoa", "fold_aqc_quad", "fold_aqc_lin", "tma_3xor", "tma_localz")


@dataclass
class Schedule:
    kind: str
    t_f: Optional[float] = None      # default N/32 qaoa, N/24 fold, N/12 tma
    dt: Optional[float] = None       # default 0.05 qaoa, 0.0325 fold, 0.025 tma
    A: Optional[float] = None        # fold target (fold/tma)
    kappa: float = 1.3               # tma transverse strength
    t_r: Optional[float] = None      # tma ramp time: N/24 (3xor), N/12 (localz)
    C_0: Optional[float] = None      # tma initial lowering coefficient
    runtime_multiplier: float = 1.0

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ParameterError(f"unknown protocol kind {self.kind!r}")

    def resolved(self, inst: Instance) -> "Schedule":
        """Fill N-dependent defaults for a concrete instance."""
        N = inst.n_vars
        kind = self.kind
        t_f = self.t_f
        dt = self.dt
        t_r = self.t_r
        C_0 = self.C_0
        if kind == "qaoa":
            t_f = N / 32 if t_f is None else t_f
            dt = 0.05 if dt is None else dt
        elif kind.startswith("fold_aqc"):
            t_f = N / 24 if t_f is None else t_f
            dt = 0.0325 if dt is None else dt
        else:  # tma
            t_f = N / 12 if t_f is None else t_f
            dt = 0.025 if dt is None else dt
            if t_r is None:
                t_r = N / 24 if kind == "tma_3xor" else N / 12
            if C_0 is None:
                C_0 = 2.0 * N / inst.n_constraints if kind == "tma_3xor" else 3.0
        if t_f <= 0 or dt <= 0:
            raise ParameterError("t_f and dt must be positive")
        return replace(self, t_f=t_f, dt=dt, t_r=t_r, C_0=C_0)

    def steps(self) -> int:
        return math.ceil(self.t_f * self.runtime_multiplier / self.dt)


@dataclass
class LoweringHamiltonian:
    kind: str          # xor3 | local_z
    anchor: int        # trial minimum L
    C_0: Optional[float] = None  # resolved: 2N/N_C (xor3) or 3 (local_z)


def make_lowering(inst: Instance, kind: str, anchor: Optional[int] = None,
                  rng=None) -> LoweringHamiltonian:
    """Anchor defaults to one greedy descent from a uniformly random start:
    the trial minimum quality is not critical, it only has to be a local
    minimum of the raw cost."""
    if kind not in ("xor3", "local_z"):
        raise ParameterError(f"unknown lowering kind {kind!r}")
    if anchor is None:
        from .greedy import GreedyConfig, greedy_descent
        if rng is None:
            rng = np.random.default_rng(0)
        start = int(rng.integers(0, 1 << inst.n_vars))
        anchor, _ = greedy_descent(inst, start, GreedyConfig(seed=int(rng.integers(2**31))), rng=rng)
    N = inst.n_vars
    C_0 = 2.0 * N / inst.n_constraints if kind == "xor3" else 3.0
    return LoweringHamiltonian(kind=kind, anchor=anchor, C_0=C_0)


def _sweep(state: StateVector, table: DiagonalTable, t_total: float, dt: float,
           g_of, f_of) -> StateVector:
    """Shared QAOA/fold-AQC loop: left-endpoint Trotter steps over [0, t_total)."""
    steps = math.ceil(t_total / dt)
    for s in range(steps):
        t = s * dt
        apply_phase(state, table, TWO_PI * g_of(t) * dt)
        apply_mixer(state, TWO_PI * f_of(t) * dt)
    return state


def run_qaoa(inst: Instance, sched: Schedule) -> StateVector:
    if sched.kind != "qaoa":
        raise ParameterError("run_qaoa requires a qaoa schedule")
    sched = sched.resolved(inst)
    tf = sched.t_f * sched.runtime_multiplier
    table = build_diagonal(inst, "problem")
    state = init_state(inst.n_vars, "uniform")
    return _sweep(state, table, tf, sched.dt,
                  g_of=lambda t: math.sqrt(t / tf),
                  f_of=lambda t: math.sqrt(1.0 - t / tf))


def run_fold_aqc(inst: Instance, sched: Schedule) -> StateVector:
    if sched.kind not in ("fold_aqc_quad", "fold_aqc_lin"):
        raise ParameterError("run_fold_aqc requires a fold_aqc schedule")
    if sched.A is None:
        raise ParameterError("fold-AQC needs the approximation target A")
    sched = sched.resolved(inst)
    tf = sched.t_f * sched.runtime_multiplier
    fold = "folded_quadratic" if sched.kind == "fold_aqc_quad" else "folded_linear"
    table = build_diagonal(inst, fold, A=sched.A)
    state = init_state(inst.n_vars, "uniform")
    # the slower quarter-power mixer turn-off is the one deviation from QAOA
    return _sweep(state, table, tf, sched.dt,
                  g_of=lambda t: math.sqrt(t / tf),
                  f_of=lambda t: (1.0 - t / tf) ** 0.25)


def run_tma(inst: Instance, sched: Schedule,
            lowering: Optional[LoweringHamiltonian] = None) -> StateVector:
    """Three stages from the trial minimum |L>: sinusoidal mixer ramp-up with
    the lowering term held at C_0, main stage at constant kappa with C(t)
    ramped linearly to zero, then mixer ramp-down with the lowering term off."""
    if sched.kind not in ("tma_3xor", "tma_localz"):
        raise ParameterError("run_tma requires a tma schedule")
    if sched.A is None:
        raise ParameterError("TMA needs the approximation target A")
    if lowering is None:
        raise ParameterError("TMA needs a LoweringHamiltonian")
    sched = sched.resolved(inst)
    kappa, dt = sched.kappa, sched.dt
    t_r = sched.t_r
    tf = sched.t_f * sched.runtime_multiplier  # multiplier varies the main stage
    C_0 = lowering.C_0 if lowering.C_0 is not None else sched.C_0

    fold = build_diagonal(inst, "folded_linear", A=sched.A)
    low = build_diagonal(inst, "lowering", lowering=lowering)
    state = init_state(inst.n_vars, "basis", m=lowering.anchor)

    # (1) ramp-up: kappa(t) = kappa sin^2(pi t / 2 t_r), C = C_0
    steps = math.ceil(t_r / dt)
    for s in range(steps):
        t = s * dt
        k_t = kappa * math.sin(math.pi * t / (2.0 * t_r)) ** 2
        apply_phase(state, fold, TWO_PI * dt)
        apply_phase(state, low, TWO_PI * dt * C_0)
        apply_mixer(state, TWO_PI * k_t * dt)

    # (2) main: kappa constant, C(t) = C_0 (1 - t/tf)
    steps = math.ceil(tf / dt)
    for s in range(steps):
        t = s * dt
        c_t = C_0 * (1.0 - t / tf)
        apply_phase(state, fold, TWO_PI * dt)
        apply_phase(state, low, TWO_PI * dt * c_t)
        apply_mixer(state, TWO_PI * kappa * dt)

    # (3) ramp-down: kappa(t) = kappa sin^2(pi (t_r - t) / 2 t_r), C = 0
    steps = math.ceil(t_r / dt)
    for s in range(steps):
        t = s * dt
        k_t = kappa * math.sin(math.pi * (t_r - t) / (2.0 * t_r)) ** 2
        apply_phase(state, fold, TWO_PI * dt)
        apply_mixer(state, TWO_PI * k_t * dt)

    return state


def run_protocol(inst: Instance, sched: Schedule,
                 lowering: Optional[LoweringHamiltonian] = None) -> StateVector:
    if sched.kind == "qaoa":
        return run_qaoa(inst, sched)
    if sched.kind.startswith("fold_aqc"):
        return run_fold_aqc(inst, sched)
    return run_tma(inst, sched, lowering=lowering)


def runtime_average(inst: Instance, sched: Schedule, grid_size: int = 8,
                    lowering: Optional[LoweringHamiltonian] = None,
                    q_grid=None, d_grid=None):
    """Average MeasureStats over a deterministic runtime-multiplier grid.

    Multipliers are evenly spaced over [2/3, 4/3]; a single-point grid uses
    the midpoint 1.0 exactly.
    """
    if grid_size < 1:
        raise ParameterError("grid_size must be >= 1")
    if q_grid is None or d_grid is None:
        from .analysis import D_GRID, Q_GRID
        q_grid = Q_GRID if q_grid is None else q_grid
        d_grid = D_GRID if d_grid is None else d_grid
    if grid_size == 1:
        mults = [1.0]
    else:
        mults = list(np.linspace(2.0 / 3.0, 4.0 / 3.0, grid_size))

    table = build_diagonal(inst, "problem")
    acc_e = np.zeros(len(q_grid))
    acc_d = np.zeros(len(d_grid))
    acc_mean = 0.0
    for mult in mults:
        s = replace(sched, runtime_multiplier=mult)
        state = run_protocol(inst, s, lowering=lowering)
        stats = measure_stats(state, inst, q_grid, d_grid, table=table)
        acc_e += stats.energy_mass
        acc_d += stats.hamming_mass
        acc_mean += stats.expected_energy
    n = float(len(mults))
    from .simulator import MeasureStats
    return MeasureStats(q_grid=tuple(q_grid), energy_mass=acc_e / n,
                        d_grid=tuple(d_grid), hamming_mass=acc_d / n,
                        expected_energy=acc_mean / n)
