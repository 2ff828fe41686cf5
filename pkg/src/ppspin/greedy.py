"""Quasi-greedy local search with random restarts.

Each step computes, for every bit b, the gain k_b = (#unsatisfied - #satisfied)
over the constraints containing b; flipping b changes the raw energy by -2*k_b.
Among bits with k > 0 a k-class is selected with probability proportional to
w(k) * f_k (w(k) = k^weight_exponent, f_k the fraction of bits at gain k) and a
uniformly random bit of that class is flipped.  Class sampling then uniform
within the class is identical to sampling single bits with weight w(k_b), which
is what the inner kernel does.  Descent halts at a 1-flip local minimum.

Restarts are embarrassingly parallel; each restart r uses an independent RNG
stream seeded by mix64(seed, r) so merged results do not depend on execution
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .instances import Instance, ParameterError

_U64 = 0xFFFFFFFFFFFFFFFF


def mix64(*parts: int) -> int:
    """Stable 64-bit mixing of integers (splitmix64 finalizer per part)."""
    x = 0x9E3779B97F4A7C15
    for p in parts:
        x = (x ^ (p & _U64)) * 0xBF58476D1CE4E5B9 & _U64
        x ^= x >> 30
        x = x * 0x94D049BB133111EB & _U64
        x ^= x >> 31
    return x


@dataclass
class GreedyConfig:
    restarts: int = 1
    weight_exponent: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.weight_exponent <= 0:
            raise ParameterError("weight_exponent must be > 0")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")


@dataclass
class GreedyResult:
    best_energy: float
    best_string: int
    minima_found: list  # [(normalized energy, bitstring), ...] unique, sorted
    steps_total: int
    counts: dict = field(default_factory=dict)  # bitstring -> hit count


def bit_gain(inst: Instance, m: int, bit: int) -> int:
    """k = #unsat - #sat over constraints containing `bit`, evaluated at m."""
    k = 0
    for c in inst.constraints:
        if bit == c.i or bit == c.j or bit == c.k:
            parity = ((m >> c.i) ^ (m >> c.j) ^ (m >> c.k)) & 1
            zprod = 1 - 2 * parity
            k += 1 if c.sign * zprod < 0 else -1
    return k


def _adjacency(inst: Instance):
    """CSR bit -> constraint-index adjacency plus flat (i, j, k) and sign arrays."""
    N = inst.n_vars
    nc = inst.n_constraints
    deg = np.zeros(N, dtype=np.int64)
    for c in inst.constraints:
        deg[c.i] += 1
        deg[c.j] += 1
        deg[c.k] += 1
    offsets = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    adj = np.empty(offsets[-1], dtype=np.int64)
    cursor = offsets[:-1].copy()
    vars_ = np.empty((nc, 3), dtype=np.int64)
    signs = np.empty(nc, dtype=np.int8)
    for idx, c in enumerate(inst.constraints):
        vars_[idx, 0], vars_[idx, 1], vars_[idx, 2] = c.i, c.j, c.k
        signs[idx] = c.sign
        for b in (c.i, c.j, c.k):
            adj[cursor[b]] = idx
            cursor[b] += 1
    return offsets, adj, vars_, signs


@njit(cache=True)
def _descent_kernel(bits, offsets, adj, cvars, csigns, wexp, seed, max_steps):
    """In-place descent on the bit array; returns (raw energy, steps taken)."""
    np.random.seed(seed)
    N = bits.shape[0]
    nc = csigns.shape[0]

    # unsat[c] = 1 when constraint c is violated at the current assignment
    unsat = np.empty(nc, dtype=np.int8)
    e_raw = 0
    for c in range(nc):
        parity = bits[cvars[c, 0]] ^ bits[cvars[c, 1]] ^ bits[cvars[c, 2]]
        zprod = 1 - 2 * parity
        if csigns[c] * zprod < 0:
            unsat[c] = 1
            e_raw += 1
        else:
            unsat[c] = 0
            e_raw -= 1

    gain = np.zeros(N, dtype=np.int64)
    for b in range(N):
        for a in range(offsets[b], offsets[b + 1]):
            gain[b] += 1 if unsat[adj[a]] else -1

    weights = np.empty(N, dtype=np.float64)
    steps = 0
    while steps < max_steps:
        total = 0.0
        for b in range(N):
            if gain[b] > 0:
                weights[b] = gain[b] ** wexp
                total += weights[b]
            else:
                weights[b] = 0.0
        if total == 0.0:
            break
        r = np.random.random() * total
        acc = 0.0
        flip = N - 1
        for b in range(N):
            acc += weights[b]
            if r < acc:
                flip = b
                break
        # apply the flip: toggle every constraint containing it and update
        # the gains of the constraints' member bits
        bits[flip] ^= 1
        for a in range(offsets[flip], offsets[flip + 1]):
            c = adj[a]
            if unsat[c]:
                unsat[c] = 0
                e_raw -= 2
                delta = -2
            else:
                unsat[c] = 1
                e_raw += 2
                delta = 2
            gain[cvars[c, 0]] += delta
            gain[cvars[c, 1]] += delta
            gain[cvars[c, 2]] += delta
        steps += 1
    return e_raw, steps


def _bits_to_int(bits) -> int:
    m = 0
    for b in range(bits.shape[0]):
        m |= int(bits[b]) << b
    return m


def greedy_descent(inst: Instance, start: int, cfg: GreedyConfig, rng=None):
    """One descent from `start`; returns (local minimum bitstring, normalized energy).

    `rng` (numpy Generator) supplies the stochastic tie-breaking stream; when
    omitted a stream is derived from cfg.seed.
    """
    N = inst.n_vars
    if rng is None:
        rng = np.random.default_rng(mix64(cfg.seed))
    offsets, adj, cvars, csigns = _adjacency(inst)
    bits = np.empty(N, dtype=np.int8)
    for b in range(N):
        bits[b] = (start >> b) & 1
    kernel_seed = int(rng.integers(0, 2**32))
    max_steps = 10 * N * inst.n_constraints
    e_raw, _ = _descent_kernel(bits, offsets, adj, cvars, csigns,
                               cfg.weight_exponent, kernel_seed, max_steps)
    m = _bits_to_int(bits)
    return m, inst.scale * e_raw


def restart_search(inst: Instance, cfg: GreedyConfig, q_grid=None):
    """Independent restarts from uniform random starts.

    Returns (GreedyResult, freqs) where freqs[q] is the fraction of restarts
    whose final energy is <= q * E_GS (E_GS = -N by normalization).
    """
    if q_grid is None:
        from .analysis import Q_GRID
        q_grid = Q_GRID
    N = inst.n_vars
    scale = inst.scale
    offsets, adj, cvars, csigns = _adjacency(inst)

    counts: dict = {}
    energies: dict = {}
    steps_total = 0
    bits = np.empty(N, dtype=np.int8)
    for r in range(cfg.restarts):
        s = mix64(cfg.seed, r)
        start = s & ((1 << N) - 1) if N <= 64 else 0
        if N > 64:
            sub = np.random.default_rng(s).integers(0, 2, size=N)
            for b in range(N):
                bits[b] = sub[b]
        else:
            for b in range(N):
                bits[b] = (start >> b) & 1
        e_raw, steps = _descent_kernel(bits, offsets, adj, cvars, csigns,
                                       cfg.weight_exponent, s % (2**32), 10 * N * inst.n_constraints)
        steps_total += steps
        m = _bits_to_int(bits)
        counts[m] = counts.get(m, 0) + 1
        energies[m] = scale * e_raw

    minima = sorted(((e, m) for m, e in energies.items()))
    best_energy, best_string = minima[0]
    e_gs = -float(N)
    freqs = {}
    for q in q_grid:
        hits = sum(cnt for m, cnt in counts.items() if energies[m] <= q * e_gs + 1e-12)
        freqs[q] = hits / cfg.restarts
    result = GreedyResult(best_energy=best_energy, best_string=best_string,
                          minima_found=minima, steps_total=steps_total, counts=counts)
    return result, freqs
