"""Aggregation of per-run measurement statistics into scaling curves.

The headline quantities are P_q(N) = P(E <= q * E_GS) averaged over
instances, the analogous Hamming-band masses, and their decay
classification: a curve is called decaying when its fitted exponential
rate exceeds 2^(-0.005 N).  The achievable approximation ratio q_a is the
largest grid q whose curve does not decay.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .instances import ParameterError
from .theory import DecayFit, NumericError, fit_decay

Q_GRID = tuple(round(0.25 + 0.05 * i, 2) for i in range(13))  # 0.25 .. 0.85
D_GRID = (0.0, 1 / 8, 1 / 5, 1 / 4, 1 / 3, 2 / 5)

DECAY_THRESHOLD = 0.005
MASS_FLOOR = 1e-12


@dataclass
class RunSummary:
    """Measurement masses for one (instance, protocol) run."""

    protocol: str
    N: int
    n_constraints: int
    epsilon: float
    seed: int
    q_mass: Dict[float, float]
    d_mass: Dict[float, float]
    expected_energy: float
    A: Optional[float] = None

    def __post_init__(self):
        qs = sorted(self.q_mass)
        masses = [self.q_mass[q] for q in qs]
        for v in list(masses) + list(self.d_mass.values()):
            if not -1e-9 <= v <= 1.0 + 1e-9:
                raise ParameterError(f"mass {v} outside [0, 1]")
        for lo, hi in zip(masses[1:], masses[:-1]):
            if lo > hi + 1e-9:
                raise ParameterError("q-masses must be non-increasing in q")

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "N": self.N,
            "n_constraints": self.n_constraints,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "A": self.A,
            "q_grid": sorted(self.q_mass),
            "q_mass": [self.q_mass[q] for q in sorted(self.q_mass)],
            "d_grid": sorted(self.d_mass),
            "d_mass": [self.d_mass[d] for d in sorted(self.d_mass)],
            "expected_energy": self.expected_energy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        return cls(
            protocol=d["protocol"],
            N=d["N"],
            n_constraints=d["n_constraints"],
            epsilon=d["epsilon"],
            seed=d["seed"],
            A=d.get("A"),
            q_mass=dict(zip(d["q_grid"], d["q_mass"])),
            d_mass=dict(zip(d["d_grid"], d["d_mass"])),
            expected_energy=d["expected_energy"],
        )


@dataclass
class ScalingCurve:
    label: str
    points: List[Tuple[int, float, float]]  # (N, mean, stderr), sorted by N
    fit: Optional[DecayFit] = None
    classification: Optional[str] = None  # "decaying" | "non-decaying"


def summarize_run(stats, inst, protocol: str, seed: int,
                  A: Optional[float] = None) -> RunSummary:
    """Package a MeasureStats into a RunSummary tagged with run identity."""
    return RunSummary(
        protocol=protocol,
        N=inst.n_vars,
        n_constraints=inst.n_constraints,
        epsilon=inst.epsilon,
        seed=seed,
        q_mass=dict(zip(stats.q_grid, stats.energy_mass)),
        d_mass=dict(zip(stats.d_grid, stats.hamming_mass)),
        expected_energy=stats.expected_energy,
        A=A,
    )


def aggregate(runs: Sequence[RunSummary]) -> Dict[str, dict]:
    """Instance-average the runs per N.

    Returns {"q": {q: ScalingCurve}, "d": {d: ScalingCurve},
    "energy": ScalingCurve}.  Means are unweighted; stderr uses ddof=1.
    Input order never matters: groups are sorted before reduction.
    """
    runs = list(runs)
    if not runs:
        raise ParameterError("aggregate needs at least one run")
    protocols = {r.protocol for r in runs}
    if len(protocols) != 1:
        raise ParameterError(f"aggregate expects a single protocol, got {sorted(protocols)}")
    by_n: Dict[int, List[RunSummary]] = {}
    for r in runs:
        by_n.setdefault(r.N, []).append(r)
    for n, grp in by_n.items():
        if len(grp) < 2:
            raise ParameterError(f"need at least 2 runs per N (N={n} has {len(grp)})")
    qs = sorted(runs[0].q_mass)
    ds = sorted(runs[0].d_mass)

    def reduce_over(extract) -> List[Tuple[int, float, float]]:
        pts = []
        for n in sorted(by_n):
            vals = np.sort(np.array([extract(r) for r in by_n[n]], dtype=np.float64))
            mean = float(vals.mean())
            err = float(vals.std(ddof=1) / math.sqrt(len(vals)))
            pts.append((n, mean, err))
        return pts

    out: Dict[str, dict] = {"q": {}, "d": {}}
    for q in qs:
        out["q"][q] = ScalingCurve(f"q={q:.2f}", reduce_over(lambda r: r.q_mass[q]))
    for d in ds:
        out["d"][d] = ScalingCurve(f"d={d:.6g}", reduce_over(lambda r: r.d_mass[d]))
    out["energy"] = ScalingCurve("E", reduce_over(lambda r: r.expected_energy))
    return out


def classify_decay(curve, form: str = "plain",
                   threshold: float = DECAY_THRESHOLD) -> Tuple[str, DecayFit]:
    """Fit the curve and call it "decaying" iff the fitted b exceeds the
    threshold rate.  Points at or below the mass floor are dropped with a
    warning (their logs are meaningless); a ScalingCurve input is annotated
    in place."""
    pts = curve.points if isinstance(curve, ScalingCurve) else list(curve)
    xy = [(p[0], p[1]) for p in pts]
    if len(xy) < 4:
        raise ParameterError("classify_decay needs at least 4 N values")
    kept = [(n, v) for n, v in xy if v > MASS_FLOOR]
    if len(kept) < len(xy):
        warnings.warn(f"dropped {len(xy) - len(kept)} non-positive points from decay fit")
    if not kept:
        raise NumericError("all points non-positive; nothing to classify")
    if len(kept) < 3:
        raise NumericError("too few positive points to fit a decay")
    fit = fit_decay(kept, form)
    label = "decaying" if fit.b > threshold else "non-decaying"
    if isinstance(curve, ScalingCurve):
        curve.fit = fit
        curve.classification = label
    return label, fit


def approx_threshold(q_curves: Dict[float, ScalingCurve],
                     form: str = "plain") -> Optional[float]:
    """Largest q whose curve is non-decaying; None when every q decays."""
    best = None
    for q in sorted(q_curves):
        c = q_curves[q]
        label = c.classification
        if label is None:
            label, _ = classify_decay(c, form)
        if label == "non-decaying":
            best = q
    return best


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_csv(path, curves: Dict[str, dict], protocol: str,
              n_c_rule: str, epsilon: float) -> None:
    """One row per (curve, N); byte-stable field formatting so identical
    inputs produce identical files."""
    rows = []

    def emit(label: str, curve: ScalingCurve):
        fa = _fmt(curve.fit.a) if curve.fit else ""
        fb = _fmt(curve.fit.b) if curve.fit else ""
        cl = curve.classification or ""
        for n, mean, err in curve.points:
            rows.append([protocol, str(n), n_c_rule, _fmt(epsilon), label,
                         _fmt(mean), _fmt(err), fa, fb, cl])

    for q in sorted(curves.get("q", {})):
        emit(f"q={q:.2f}", curves["q"][q])
    for d in sorted(curves.get("d", {})):
        emit(f"d={d:.6g}", curves["d"][d])
    if curves.get("energy") is not None:
        emit("E", curves["energy"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["protocol", "N", "N_C_rule", "epsilon", "q_or_d",
                    "mean", "stderr", "fit_a", "fit_b", "classification"])
        w.writerows(rows)
