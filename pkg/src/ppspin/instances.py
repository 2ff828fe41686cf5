"""Planted partial solution MAX-3-XORSAT instances.

An instance is a list of N_C unique signed triples (i, j, k, V) over N spin
variables, with cost E_raw(m) = N_unsat(m) - N_sat(m).  A constraint is
satisfied at bitstring m when V * Z_i Z_j Z_k = +1 with Z_b = (-1)^{bit b}.
A planted string G is built in so that exactly round((1-eps) * N_C)
constraints are satisfied at G; rescaling by scale = N / ((1-2*eps) * N_C)
puts the planted energy at exactly -N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple, Optional

import numpy as np


class Constraint(NamedTuple):
    i: int
    j: int
    k: int
    sign: int  # V_ijk, +1 or -1

    def canonical(self) -> "Constraint":
        a, b, c = sorted((self.i, self.j, self.k))
        return Constraint(a, b, c, self.sign)


class ParameterError(ValueError):
    pass


@dataclass
class Instance:
    n_vars: int
    constraints: list  # list[Constraint], canonical and sorted by index triple
    epsilon: float = 0.0
    planted: Optional[int] = None
    seed: Optional[int] = None
    _masks: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _signs: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def scale(self) -> float:
        """Normalization so the planted string sits at energy -N."""
        if self.planted is None:
            raise RuntimeError("instance has no planted string; scale undefined")
        return self.n_vars / ((1.0 - 2.0 * self.epsilon) * self.n_constraints)

    def packed(self):
        """(masks, signs) as uint64 / int8 arrays for vectorized evaluation.

        Only valid for n_vars <= 64; larger instances fall back to the
        per-constraint integer path.
        """
        if self._masks is None:
            if self.n_vars > 64:
                raise RuntimeError("packed masks require n_vars <= 64")
            masks = np.empty(len(self.constraints), dtype=np.uint64)
            signs = np.empty(len(self.constraints), dtype=np.int8)
            for idx, c in enumerate(self.constraints):
                masks[idx] = (1 << c.i) | (1 << c.j) | (1 << c.k)
                signs[idx] = c.sign
            self._masks = masks
            self._signs = signs
        return self._masks, self._signs

    def to_json(self) -> str:
        planted_str = None
        if self.planted is not None:
            planted_str = format(self.planted, f"0{self.n_vars}b")  # LSB = variable 0
        obj = {
            "n": self.n_vars,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "planted": planted_str,
            "constraints": [[c.i, c.j, c.k, c.sign] for c in self.constraints],
        }
        return json.dumps(obj)

    @staticmethod
    def from_json(text: str) -> "Instance":
        obj = json.loads(text)
        cons = [Constraint(i, j, k, s).canonical() for i, j, k, s in obj["constraints"]]
        planted = None
        if obj.get("planted") is not None:
            planted = int(obj["planted"], 2)
        return Instance(
            n_vars=obj["n"],
            constraints=cons,
            epsilon=obj.get("epsilon", 0.0),
            planted=planted,
            seed=obj.get("seed"),
        )


def generate_ppsp(N: int, N_C: int, epsilon: float, seed: int) -> Instance:
    """Generate a planted instance: N_C unique triples, random planted string G,
    signs chosen so exactly round((1-epsilon)*N_C) constraints are satisfied at G.
    Deterministic in (N, N_C, epsilon, seed)."""
    if N < 3:
        raise ParameterError(f"need N >= 3, got {N}")
    if N_C > comb(N, 3):
        raise ParameterError(f"N_C={N_C} exceeds number of distinct triples C({N},3)={comb(N, 3)}")
    if not (0.0 <= epsilon < 0.5):
        raise ParameterError(f"epsilon must be in [0, 1/2), got {epsilon} (scale undefined at 1/2)")

    rng = np.random.default_rng(seed)
    triples = set()
    while len(triples) < N_C:
        t = rng.choice(N, size=3, replace=False)
        triples.add(tuple(sorted(int(x) for x in t)))
    ordered = sorted(triples)

    bits = rng.integers(0, 2, size=N)
    planted = 0
    for b in range(N):
        planted |= int(bits[b]) << b

    n_sat = round((1.0 - epsilon) * N_C)
    sat_idx = set(rng.permutation(N_C)[:n_sat].tolist())

    constraints = []
    for idx, (i, j, k) in enumerate(ordered):
        parity = ((planted >> i) ^ (planted >> j) ^ (planted >> k)) & 1
        z_product = 1 - 2 * parity
        sign = z_product if idx in sat_idx else -z_product
        constraints.append(Constraint(i, j, k, int(sign)))

    return Instance(n_vars=N, constraints=constraints, epsilon=epsilon,
                    planted=planted, seed=seed)


def raw_energy(inst: Instance, m: int) -> int:
    """N_unsat - N_sat at bitstring m."""
    e = 0
    for c in inst.constraints:
        parity = ((m >> c.i) ^ (m >> c.j) ^ (m >> c.k)) & 1
        z_product = 1 - 2 * parity
        e -= c.sign * z_product  # satisfied contributes -1, violated +1
    return e


def normalized_energy(inst: Instance, m: int) -> float:
    return inst.scale * raw_energy(inst, m)


def hamming_distance(m1: int, m2: int) -> int:
    return (m1 ^ m2).bit_count()


def xor_satisfiable(inst: Instance):
    """GF(2) Gaussian elimination on x_i + x_j + x_k = c (c = 0 iff sign +1).

    Returns (True, witness) with a bitstring satisfying every constraint, or
    (False, None).  Rows are stored as bitsets (python ints) with the constant
    term at bit N.
    """
    N = inst.n_vars
    rhs_bit = 1 << N
    rows = []
    for c in inst.constraints:
        row = (1 << c.i) | (1 << c.j) | (1 << c.k)
        if c.sign < 0:
            row |= rhs_bit
        rows.append(row)

    pivot_of_col = {}
    used = set()
    for col in range(N):
        colmask = 1 << col
        pivot = None
        for r, row in enumerate(rows):
            if r not in used and (row & colmask):
                pivot = r
                break
        if pivot is None:
            continue
        pivot_of_col[col] = pivot
        used.add(pivot)
        prow = rows[pivot]
        for r in range(len(rows)):
            if r != pivot and (rows[r] & colmask):
                rows[r] ^= prow

    for r, row in enumerate(rows):
        if (row & ~rhs_bit) == 0 and (row & rhs_bit):
            return False, None

    witness = 0
    for col, r in pivot_of_col.items():
        if rows[r] & rhs_bit:  # free variables fixed to 0, so x_col = rhs
            witness |= 1 << col
    return True, witness
