"""Instance generation, energies, serialization, and GF(2) solvability."""

import json
import random

import numpy as np
import pytest

from ppspin import (
    Constraint,
    Instance,
    ParameterError,
    generate_ppsp,
    hamming_distance,
    normalized_energy,
    raw_energy,
    xor_satisfiable,
)


def brute_force_raw_energy(inst, m):
    # sign convention spelled out by hand: bit 0 -> Z = +1
    e = 0
    for (i, j, k, sign) in inst.constraints:
        z = 1
        for b in (i, j, k):
            z *= 1 - 2 * ((m >> b) & 1)
        e += 1 if sign * z < 0 else -1
    return e


def test_generate_basic_shape():
    inst = generate_ppsp(16, 64, 0.1, seed=1)
    assert inst.n_vars == 16
    assert inst.n_constraints == 64
    seen = set()
    for c in inst.constraints:
        assert 0 <= c.i < c.j < c.k < 16
        assert c.sign in (-1, 1)
        assert (c.i, c.j, c.k) not in seen, "constraint triples must be unique"
        seen.add((c.i, c.j, c.k))


def test_generate_deterministic():
    a = generate_ppsp(12, 30, 0.2, seed=99)
    b = generate_ppsp(12, 30, 0.2, seed=99)
    assert a.constraints == b.constraints
    assert a.planted == b.planted
    c = generate_ppsp(12, 30, 0.2, seed=100)
    assert a.constraints != c.constraints or a.planted != c.planted


def test_planted_satisfies_expected_fraction():
    for seed in range(8):
        inst = generate_ppsp(14, 56, 0.1, seed=seed)
        n_sat = sum(1 for c in inst.constraints
                    if c.sign * np.prod([1 - 2 * ((inst.planted >> b) & 1)
                                         for b in (c.i, c.j, c.k)]) > 0)
        assert n_sat == round(0.9 * 56)


def test_epsilon_zero_energy_is_exactly_minus_n():
    inst = generate_ppsp(10, 40, 0.0, seed=5)
    assert normalized_energy(inst, inst.planted) == pytest.approx(-10.0, abs=1e-12)


def test_planted_energy_near_minus_n():
    # rounding of the satisfied count moves E(G) by at most one raw unit
    for seed in range(10):
        inst = generate_ppsp(12, 50, 0.17, seed=seed)
        assert abs(normalized_energy(inst, inst.planted) + 12.0) <= inst.scale + 1e-12


def test_raw_energy_matches_brute_force():
    rng = random.Random(7)
    inst = generate_ppsp(10, 35, 0.1, seed=3)
    for _ in range(50):
        m = rng.randrange(1 << 10)
        assert raw_energy(inst, m) == brute_force_raw_energy(inst, m)


def test_energy_complement_antisymmetry():
    # flipping every bit flips each triple's parity, so E_raw changes sign
    for seed in range(6):
        inst = generate_ppsp(11, 44, 0.1, seed=seed)
        rng = random.Random(seed)
        full = (1 << 11) - 1
        for _ in range(20):
            m = rng.randrange(1 << 11)
            assert raw_energy(inst, m ^ full) == -raw_energy(inst, m)


def test_scale_definition():
    inst = generate_ppsp(12, 48, 0.1, seed=0)
    assert inst.scale == pytest.approx(12 / (0.8 * 48))
    bare = Instance(n_vars=4, constraints=[Constraint(0, 1, 2, 1)],
                    epsilon=0.0, planted=None, seed=0)
    with pytest.raises(RuntimeError):
        bare.scale


def test_parameter_validation():
    with pytest.raises(ParameterError):
        generate_ppsp(2, 4, 0.1, seed=0)       # need at least 3 variables
    with pytest.raises(ParameterError):
        generate_ppsp(10, 40, 0.5, seed=0)     # epsilon < 1/2
    with pytest.raises(ParameterError):
        generate_ppsp(10, 40, -0.1, seed=0)
    with pytest.raises(ParameterError):
        generate_ppsp(10, 200, 0.1, seed=0)    # more triples than C(10,3)


def test_json_round_trip():
    inst = generate_ppsp(13, 39, 0.25, seed=21)
    blob = inst.to_json()
    again = Instance.from_json(blob)
    assert again.constraints == inst.constraints
    assert again.planted == inst.planted
    assert again.epsilon == inst.epsilon
    assert again.n_vars == inst.n_vars
    # planted is serialized as a readable bitstring, MSB first
    doc = json.loads(blob)
    assert doc["planted"] == format(inst.planted, "013b")


def test_packed_masks():
    inst = generate_ppsp(9, 20, 0.1, seed=2)
    masks, signs = inst.packed()
    for c, mask, sign in zip(inst.constraints, masks, signs):
        assert int(mask) == (1 << c.i) | (1 << c.j) | (1 << c.k)
        assert int(sign) == c.sign


def test_hamming_distance():
    assert hamming_distance(0b1010, 0b0110) == 2
    assert hamming_distance(0, 0) == 0
    rng = random.Random(11)
    for _ in range(30):
        m1, m2 = rng.randrange(1 << 20), rng.randrange(1 << 20)
        assert hamming_distance(m1, m2) == bin(m1 ^ m2).count("1")


def brute_force_satisfiable(inst):
    for m in range(1 << inst.n_vars):
        if all(c.sign * (1 - 2 * (bin(m & ((1 << c.i) | (1 << c.j) | (1 << c.k))).count("1") & 1)) > 0
               for c in inst.constraints):
            return True
    return False


def test_xor_satisfiable_against_brute_force():
    # random signed triple systems, N small enough to enumerate
    rng = random.Random(4)
    for trial in range(40):
        n = rng.randint(3, 8)
        n_c = rng.randint(1, 16)
        constraints = []
        for _ in range(n_c):
            i, j, k = sorted(rng.sample(range(n), 3))
            constraints.append(Constraint(i, j, k, rng.choice((-1, 1))))
        inst = Instance(n_vars=n, constraints=constraints, epsilon=0.0,
                        planted=None, seed=0)
        ok, witness = xor_satisfiable(inst)
        assert ok == brute_force_satisfiable(inst), f"trial {trial}"
        if ok:
            assert raw_energy(inst, witness) == -len(constraints)


def test_xor_satisfiable_larger_brute_force():
    # the N <= 12 agreement check on generated instances
    rng = random.Random(9)
    for trial in range(6):
        n = rng.choice((10, 11, 12))
        inst = generate_ppsp(n, 3 * n, 0.0, seed=trial)
        ok, witness = xor_satisfiable(inst)
        assert ok, "a fully planted instance is satisfiable by construction"
        assert raw_energy(inst, witness) == -inst.n_constraints


def test_xor_satisfiable_planted_epsilon_zero():
    inst = generate_ppsp(20, 60, 0.0, seed=77)
    ok, witness = xor_satisfiable(inst)
    assert ok
    assert raw_energy(inst, witness) == -60
