"""
Planted instances and the quasi-greedy baseline
===============================================

Generates a planted MAX-3-XORSAT instance, pokes at its energy landscape,
and measures how often weighted greedy descent recovers the planted optimum
at two constraint densities.
"""

import numpy as np

from ppspin import (
    GreedyConfig,
    generate_ppsp,
    greedy_descent,
    hamming_distance,
    normalized_energy,
    raw_energy,
    restart_search,
)

# ---------------------------------------------------------------------------
# A single instance: N spins, N_C = 4N unique triples, 10% of them violated
# by the planted assignment.

N = 24
inst = generate_ppsp(N, 4 * N, epsilon=0.1, seed=7)

planted = inst.planted
satisfied = (inst.n_constraints - raw_energy(inst, planted)) // 2
print(f"N={inst.n_vars}  N_C={inst.n_constraints}  epsilon={inst.epsilon}")
print(f"planted assignment satisfies {satisfied}/{inst.n_constraints} constraints")
print(f"planted normalized energy   {normalized_energy(inst, planted):+.4f}"
      f"  (perfect satisfaction would be {-N})")

# random strings sit near zero energy; the planted string is an outlier
rng = np.random.default_rng(0)
samples = [normalized_energy(inst, int(m)) for m in rng.integers(0, 2**N, size=200)]
print(f"random strings: mean {np.mean(samples):+.3f}, min {min(samples):+.3f}")

# ---------------------------------------------------------------------------
# Greedy descent walks downhill flipping one variable at a time, picking the
# flip with probability proportional to gain^2.  From a random start it lands
# in some local minimum; the question is how deep.

cfg1 = GreedyConfig(restarts=1, weight_exponent=2.0, seed=0)
for start_seed in range(3):
    start = int(np.random.default_rng(start_seed).integers(0, 2**N))
    m, e = greedy_descent(inst, start, cfg1)
    print(f"descent from seed {start_seed}: E={e:+.4f}, distance to planted "
          f"{min(hamming_distance(m, planted), hamming_distance(m ^ (2**N - 1), planted))}")

# ---------------------------------------------------------------------------
# Restart statistics at N = 32.  The recovery probability is *higher* at
# N_C = 6N than at 2N: more constraints make the planted funnel steeper,
# even though each individual constraint is easier to violate.

for mult in (2, 6):
    inst32 = generate_ppsp(32, mult * 32, epsilon=0.1, seed=100 + mult)
    cfg = GreedyConfig(restarts=20_000, weight_exponent=2.0, seed=1)
    result, freqs = restart_search(inst32, cfg, q_grid=(0.8, 0.9, 1.0))
    print(f"N_C={mult}N: best E={result.best_energy:+.4f}, "
          f"local minima found {len(result.minima_found)}, "
          f"P(E <= 0.8 E_GS)={freqs[0.8]:.3f}  P(E <= E_GS)={freqs[1.0]:.4f}")
