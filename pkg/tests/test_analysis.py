import copy
import csv
import math

import numpy as np
import pytest

from ppspin import (
    D_GRID,
    Q_GRID,
    NumericError,
    ParameterError,
    RunSummary,
    ScalingCurve,
    aggregate,
    approx_threshold,
    classify_decay,
    generate_ppsp,
    summarize_run,
    write_csv,
)
from ppspin.simulator import build_diagonal, init_state, measure_stats


def make_run(N, seed, value, protocol="qaoa"):
    """RunSummary whose every mass equals `value` (flat curves)."""
    return RunSummary(
        protocol=protocol,
        N=N,
        n_constraints=4 * N,
        epsilon=0.1,
        seed=seed,
        q_mass={q: value for q in Q_GRID},
        d_mass={d: value for d in D_GRID},
        expected_energy=-value * N,
    )


def test_run_summary_rejects_bad_masses():
    with pytest.raises(ParameterError):
        RunSummary("qaoa", 10, 40, 0.1, 1, {0.5: 1.5}, {0.0: 0.1}, -1.0)
    with pytest.raises(ParameterError):
        RunSummary("qaoa", 10, 40, 0.1, 1, {0.5: -0.2}, {0.0: 0.1}, -1.0)
    # masses must not grow with q
    with pytest.raises(ParameterError):
        RunSummary("qaoa", 10, 40, 0.1, 1, {0.5: 0.2, 0.6: 0.3}, {0.0: 0.1}, -1.0)
    # equal masses are fine
    RunSummary("qaoa", 10, 40, 0.1, 1, {0.5: 0.2, 0.6: 0.2}, {0.0: 0.1}, -1.0)


def test_run_summary_round_trip_is_exact():
    rng = np.random.default_rng(3)
    base = rng.uniform(0.2, 0.9)
    drops = np.sort(rng.uniform(0.0, 0.1, size=len(Q_GRID)))
    q_mass = {q: float(base - drop) for q, drop in zip(Q_GRID, drops)}
    d_mass = {d: float(rng.uniform(0, 1)) for d in D_GRID}
    run = RunSummary("tma", 14, 84, 0.1, 99, q_mass, d_mass,
                     expected_energy=-13.1234567890123, A=0.85)
    back = RunSummary.from_dict(run.to_dict())
    assert back.q_mass == run.q_mass
    assert back.d_mass == run.d_mass
    assert back.expected_energy == run.expected_energy
    assert back.A == run.A and back.seed == run.seed


def test_summarize_run_tags_identity():
    inst = generate_ppsp(6, 20, 0.1, seed=5)
    state = init_state(6)
    table = build_diagonal(inst, "problem")
    stats = measure_stats(state, inst, Q_GRID, D_GRID, table=table)
    run = summarize_run(stats, inst, "qaoa", seed=5, A=None)
    assert run.N == 6 and run.n_constraints == 20
    assert run.q_mass[Q_GRID[0]] == stats.energy_mass[0]
    assert run.d_mass[0.0] == stats.hamming_mass[0]
    assert run.expected_energy == stats.expected_energy


def test_aggregate_means_and_errors():
    # two identical runs: stderr exactly zero
    runs = [make_run(10, 0, 0.4), make_run(10, 1, 0.4)]
    out = aggregate(runs)
    n, mean, err = out["q"][0.5].points[0]
    assert (n, mean, err) == (10, 0.4, 0.0)

    # {0.2, 0.4}: mean 0.3, stderr = std(ddof=1)/sqrt(2) = 0.1
    runs = [make_run(10, 0, 0.2), make_run(10, 1, 0.4)]
    out = aggregate(runs)
    n, mean, err = out["q"][0.5].points[0]
    assert mean == pytest.approx(0.3, abs=1e-15)
    assert err == pytest.approx(0.1, abs=1e-15)
    # the energy curve sees -value*N
    n, mean, err = out["energy"].points[0]
    assert mean == pytest.approx(-3.0, abs=1e-12)


def test_aggregate_is_permutation_invariant():
    rng = np.random.default_rng(17)
    runs = []
    for n in (10, 12, 14):
        for i in range(6):
            runs.append(make_run(n, i, float(rng.uniform(0.1, 0.9))))
    ref = aggregate(runs)
    perm = list(runs)
    rng.shuffle(perm)
    out = aggregate(perm)
    for q in Q_GRID:
        assert out["q"][q].points == ref["q"][q].points  # bitwise equal
    assert out["energy"].points == ref["energy"].points


def test_aggregate_input_validation():
    with pytest.raises(ParameterError):
        aggregate([])
    with pytest.raises(ParameterError):
        aggregate([make_run(10, 0, 0.4)])  # lone run at its N
    with pytest.raises(ParameterError):
        aggregate([make_run(10, 0, 0.4), make_run(10, 1, 0.4),
                   make_run(12, 2, 0.3)])  # N=12 has one run
    with pytest.raises(ParameterError):
        aggregate([make_run(10, 0, 0.4, protocol="qaoa"),
                   make_run(10, 1, 0.4, protocol="tma")])


def test_aggregate_stderr_matches_bootstrap():
    # independent check of the ddof=1 analytic error against resampling
    rng = np.random.default_rng(23)
    vals = rng.uniform(0.2, 0.8, size=40)
    runs = [make_run(16, i, float(v)) for i, v in enumerate(vals)]
    _, mean, err = aggregate(runs)["q"][0.5].points[0]
    assert mean == pytest.approx(vals.mean(), abs=1e-12)
    boots = []
    for _ in range(2000):
        sample = rng.choice(vals, size=vals.size, replace=True)
        boots.append(sample.mean())
    assert err == pytest.approx(np.std(boots), rel=0.2)


def curve_from(ns, values):
    return ScalingCurve("q=0.50", [(n, v, 0.0) for n, v in zip(ns, values)])


def test_classify_decay_on_exact_exponentials():
    ns = list(range(10, 26, 2))
    # flat curve: b == 0, non-decaying
    label, fit = classify_decay(curve_from(ns, [0.37] * len(ns)))
    assert label == "non-decaying"
    assert fit.b == pytest.approx(0.0, abs=1e-12)

    # crisp decay at rate 0.1
    label, fit = classify_decay(curve_from(ns, [2 ** (-0.1 * n) for n in ns]))
    assert label == "decaying"
    assert fit.b == pytest.approx(0.1, abs=1e-10)

    # decay slower than the threshold rate still counts as non-decaying
    label, fit = classify_decay(curve_from(ns, [2 ** (-0.004 * n) for n in ns]))
    assert label == "non-decaying"
    assert fit.b == pytest.approx(0.004, abs=1e-10)


def test_classify_decay_scale_invariance():
    ns = list(range(10, 26, 2))
    vals = [2 ** (-0.06 * n) for n in ns]
    _, fit1 = classify_decay(curve_from(ns, vals))
    _, fit2 = classify_decay(curve_from(ns, [v * 7.5 for v in vals]))
    assert fit2.b == pytest.approx(fit1.b, abs=1e-12)
    assert fit2.a == pytest.approx(7.5 * fit1.a, rel=1e-9)


def test_classify_decay_annotates_curve():
    ns = [10, 12, 14, 16]
    c = curve_from(ns, [2 ** (-0.2 * n) for n in ns])
    label, fit = classify_decay(c)
    assert c.classification == label == "decaying"
    assert c.fit is fit


def test_classify_decay_drops_dead_points():
    ns = [10, 12, 14, 16, 18]
    vals = [2 ** (-0.1 * n) for n in ns]
    vals[2] = 0.0
    with pytest.warns(UserWarning):
        label, fit = classify_decay(curve_from(ns, vals))
    assert label == "decaying"
    assert fit.b == pytest.approx(0.1, abs=1e-9)

    with pytest.raises(NumericError), pytest.warns(UserWarning):
        classify_decay(curve_from(ns, [0.0] * 5))
    with pytest.raises(NumericError), pytest.warns(UserWarning):
        classify_decay(curve_from(ns, [0.5, 0.0, 0.0, 0.0, 0.5]))
    with pytest.raises(ParameterError):
        classify_decay(curve_from([10, 12, 14], [0.5, 0.4, 0.3]))


def test_approx_threshold_picks_largest_surviving_q():
    ns = list(range(10, 26, 2))
    curves = {}
    for q in Q_GRID:
        rate = 0.0 if q <= 0.7 else 0.08  # decay only above q = 0.7
        curves[q] = curve_from(ns, [0.5 * 2 ** (-rate * n) for n in ns])
    assert approx_threshold(curves) == 0.7

    all_dec = {q: curve_from(ns, [2 ** (-0.05 * n) for n in ns]) for q in Q_GRID}
    assert approx_threshold(all_dec) is None

    all_flat = {q: curve_from(ns, [0.3] * len(ns)) for q in Q_GRID}
    assert approx_threshold(all_flat) == max(Q_GRID)


def test_approx_threshold_respects_existing_classification():
    ns = [10, 12, 14, 16]
    c = curve_from(ns, [2 ** (-0.3 * n) for n in ns])  # plainly decaying...
    c.classification = "non-decaying"                   # ...but pre-tagged
    assert approx_threshold({0.5: c}) == 0.5


def test_write_csv_is_byte_stable(tmp_path):
    rng = np.random.default_rng(31)
    runs = []
    for n in (10, 12, 14, 16):
        for i in range(4):
            runs.append(make_run(n, i, float(rng.uniform(0.2, 0.8))))
    curves = aggregate(runs)
    for q in Q_GRID:
        classify_decay(curves["q"][q])

    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(p1, curves, "qaoa", "4*N", 0.1)
    write_csv(p2, copy.deepcopy(curves), "qaoa", "4*N", 0.1)
    assert p1.read_bytes() == p2.read_bytes()

    with open(p1, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["protocol", "N", "N_C_rule", "epsilon", "q_or_d",
                       "mean", "stderr", "fit_a", "fit_b", "classification"]
    # 13 q-curves + 6 d-curves + energy, 4 N's each
    assert len(rows) - 1 == (len(Q_GRID) + len(D_GRID) + 1) * 4
    q_rows = [r for r in rows if r[4] == "q=0.50"]
    assert [r[1] for r in q_rows] == ["10", "12", "14", "16"]
    assert all(r[9] in ("decaying", "non-decaying") for r in q_rows)
