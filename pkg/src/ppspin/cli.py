"""Command-line orchestration: instance suites, batch protocol runs, reports.

All subcommands consume a JSON config carrying a ``"schema": 1`` field and
write CSV/JSON into ``--out``.  Outputs are deterministic functions of the
config: per-instance seeds derive from a stable 64-bit hash of
(base_seed, N, index), work is merged in task order regardless of
``--threads``, and floats are formatted identically on every run, so
re-running a config reproduces its files byte for byte.

Subcommands:

* ``gen``     write instance files for a (N list, N_C rule, epsilon) suite
* ``greedy``  restart-search statistics over such a suite
* ``run``     protocol batch with runtime averaging -> summary CSV + JSON
* ``theory``  closed-form tables (appendixA | ptas | aqc_gap | p2)
* ``analyze`` re-aggregate previously written run reports
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .analysis import (Q_GRID, RunSummary, aggregate, approx_threshold,
                       classify_decay, summarize_run, write_csv)
from .greedy import GreedyConfig, mix64, restart_search
from .instances import ParameterError, generate_ppsp
from .protocols import PROTOCOL_KINDS, Schedule, make_lowering, runtime_average
from .simulator import ResourceError
from . import theory

SCHEMA = 1

N_C_RULES = ("multiple", "power")
THEORY_PRESETS = ("appendixA", "ptas", "aqc_gap", "p2")


def n_c_from_rule(rule: dict, N: int) -> int:
    kind, c = rule["kind"], rule["c"]
    if kind == "multiple":
        return int(round(c * N))
    if kind == "power":
        return int(round(c * N**1.5))
    raise ParameterError(f"unknown N_C rule {kind!r} (expected one of {N_C_RULES})")


def rule_label(rule: dict) -> str:
    return (f"{rule['c']:g}*N" if rule["kind"] == "multiple"
            else f"{rule['c']:g}*N^1.5")


@dataclass
class ExperimentConfig:
    protocol: str
    Ns: List[int]
    n_c_rule: dict
    epsilon: float
    instances_per_n: int
    base_seed: int
    A: Optional[float] = None
    kappa: float = 1.3
    runtime_grid: int = 8
    label: str = "experiment"
    dt: Optional[float] = None
    t_f: Optional[float] = None

    def __post_init__(self):
        if self.protocol not in PROTOCOL_KINDS:
            raise ParameterError(f"unknown protocol {self.protocol!r} "
                                 f"(expected one of {PROTOCOL_KINDS})")
        if not self.Ns:
            raise ParameterError("N list must not be empty")
        if any(int(n) != n or n < 1 for n in self.Ns):
            raise ParameterError("N values must be positive integers")
        if self.n_c_rule.get("kind") not in N_C_RULES or "c" not in self.n_c_rule:
            raise ParameterError(f"N_C rule must be {{kind: multiple|power, c: float}}, "
                                 f"got {self.n_c_rule!r}")
        if not 0 <= self.epsilon < 0.5:
            raise ParameterError("epsilon must lie in [0, 0.5)")
        if self.instances_per_n < 2:
            raise ParameterError("instances_per_n must be >= 2 (aggregation needs it)")
        if self.protocol != "qaoa" and self.A is None:
            raise ParameterError(f"protocol {self.protocol!r} requires a fold scale A")
        if self.runtime_grid < 1:
            raise ParameterError("runtime_grid must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known - {"schema"}
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        kwargs = {k: v for k, v in d.items() if k in known}
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA, "protocol": self.protocol, "Ns": list(self.Ns),
            "n_c_rule": dict(self.n_c_rule), "epsilon": self.epsilon,
            "instances_per_n": self.instances_per_n, "base_seed": self.base_seed,
            "A": self.A, "kappa": self.kappa, "runtime_grid": self.runtime_grid,
            "label": self.label, "dt": self.dt, "t_f": self.t_f,
        }


def _available_ram() -> int:
    try:
        return os.sysconf("SC_PHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return 1 << 62


def _required_ram(protocol: str, max_n: int, threads: int) -> int:
    tables = 2 if protocol.startswith("tma") else 1
    per_worker = (48 + 8 * tables) * (1 << max_n)  # state + temps + tables
    return per_worker * max(1, threads)


def _check_ram(protocol: str, max_n: int, threads: int) -> None:
    required = _required_ram(protocol, max_n, threads)
    available = _available_ram()
    if required > available:
        raise ResourceError(
            f"refusing statevector run: N={max_n} x {threads} worker(s) needs "
            f"~{required / 2**30:.2f} GiB, {available / 2**30:.2f} GiB available")


def _instance_seed(base_seed: int, N: int, index: int) -> int:
    return mix64(base_seed, N, index)


def run_experiment(config, out_dir: str = ".", threads: int = 1,
                   dry_run: bool = False):
    """Generate -> run -> summarize -> aggregate -> write CSV + JSON report.

    Returns the report dict (None on dry runs).  Task results are merged in
    task order, so the output is independent of the thread count.
    """
    cfg = ExperimentConfig.from_dict(config) if isinstance(config, dict) else config
    max_n = max(cfg.Ns)
    tasks = [(N, i) for N in cfg.Ns for i in range(cfg.instances_per_n)]
    if dry_run:
        required = _required_ram(cfg.protocol, max_n, threads)
        print(f"plan: {len(tasks)} runs of {cfg.protocol}, N in {sorted(set(cfg.Ns))}, "
              f"{cfg.instances_per_n} instances per N, runtime grid {cfg.runtime_grid}")
        print(f"memory: ~{required / 2**30:.2f} GiB required at N={max_n} with "
              f"{threads} worker(s); {_available_ram() / 2**30:.2f} GiB available")
        return None
    _check_ram(cfg.protocol, max_n, threads)

    def one(task):
        N, index = task
        seed = _instance_seed(cfg.base_seed, N, index)
        inst = generate_ppsp(N, n_c_from_rule(cfg.n_c_rule, N), cfg.epsilon, seed)
        sched = Schedule(kind=cfg.protocol, A=cfg.A, kappa=cfg.kappa,
                         dt=cfg.dt, t_f=cfg.t_f)
        lowering = None
        if cfg.protocol.startswith("tma"):
            lower_kind = "xor3" if cfg.protocol == "tma_3xor" else "local_z"
            lowering = make_lowering(inst, lower_kind,
                                     rng=np.random.default_rng(mix64(seed, 1)))
        stats = runtime_average(inst, sched, grid_size=cfg.runtime_grid,
                                lowering=lowering)
        return summarize_run(stats, inst, cfg.protocol, seed, A=cfg.A)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, tasks))  # map preserves task order
    else:
        results = [one(t) for t in tasks]

    curves = aggregate(results)
    q_a = None
    if len(set(cfg.Ns)) >= 4:
        for c in list(curves["q"].values()) + list(curves["d"].values()):
            classify_decay(c)
        q_a = approx_threshold(curves["q"])

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{cfg.label}.csv")
    write_csv(csv_path, curves, cfg.protocol, rule_label(cfg.n_c_rule), cfg.epsilon)
    report = {"schema": SCHEMA, "config": cfg.to_dict(), "q_a": q_a,
              "runs": [r.to_dict() for r in results]}
    with open(os.path.join(out_dir, f"{cfg.label}.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def theory_report(preset: str, out_dir: str = ".") -> str:
    """Write the closed-form table for a preset; returns the CSV path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"theory_{preset}.csv")
    if preset == "appendixA":
        rows = theory.appendix_exponent_table()
        header = ["p", "kappa", "b_theory", "b_ed"]
        table = [[r["p"], f"{r['kappa']:.10g}", f"{r['b_theory']:.6f}",
                  f"{r['b_ed']:.6f}"] for r in rows]
    elif preset == "ptas":
        bs = sorted({round(0.02 * i, 2) for i in range(26)} | {0.16, 0.2})
        header = ["b", "x_A", "A"]
        table = []
        for b in bs:
            sol = theory.solve_ptas(b)
            if sol is None:
                table.append([f"{b:.10g}", "", ""])
            else:
                table.append([f"{b:.10g}", f"{sol.x_A:.6f}", f"{sol.A:.6f}"])
    elif preset == "aqc_gap":
        kappa = 1.29
        ns = list(range(20, 81, 4))
        logs = [theory.aqc_overlap_gap(n, kappa) for n in ns]
        fit = theory.fit_decay([(n, math.exp(v)) for n, v in zip(ns, logs)], "plain")
        header = ["N", "kappa", "ln_gap", "fit_a", "fit_b"]
        table = [[n, f"{kappa:.10g}", f"{v:.6f}", f"{fit.a:.6f}", f"{fit.b:.6f}"]
                 for n, v in zip(ns, logs)]
    elif preset == "p2":
        kappas = [round(0.4 + 0.1 * i, 1) for i in range(13)]  # 0.4 .. 1.6
        ns = list(range(10, 61, 2))
        growth = []
        for k in kappas:
            lw = [theory.p2_gap(n, k)[1] for n in ns]
            slope = np.polyfit(ns, lw, 1)[0]  # ln w^2 ~ N ln(1 + c)
            growth.append(math.expm1(slope))
        coef = np.polyfit(np.log(kappas), np.log(growth), 1)  # c = a kappa^b
        b_fit, ln_a = float(coef[0]), float(coef[1])
        a_fit = math.exp(ln_a)
        header = ["kappa", "growth_c", "fit_a", "fit_b"]
        table = [[f"{k:.10g}", f"{c:.8f}", f"{a_fit:.6f}", f"{b_fit:.6f}"]
                 for k, c in zip(kappas, growth)]
    else:
        raise ParameterError(f"unknown theory preset {preset!r} "
                             f"(expected one of {THEORY_PRESETS})")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(table)
    return path


def _load_config(path: str) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if cfg.get("schema") != SCHEMA:
        raise ParameterError(f"config schema must be {SCHEMA}, got {cfg.get('schema')!r}")
    return cfg


def _cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    ns = cfg["Ns"]
    rule = cfg["n_c_rule"]
    epsilon = cfg["epsilon"]
    count = cfg["instances_per_n"]
    base_seed = cfg["base_seed"]
    if not ns:
        raise ParameterError("N list must not be empty")
    if args.dry_run:
        print(f"plan: {len(ns) * count} instances, rule {rule_label(rule)}")
        return 0
    os.makedirs(args.out, exist_ok=True)
    for n in ns:
        for i in range(count):
            seed = _instance_seed(base_seed, n, i)
            inst = generate_ppsp(n, n_c_from_rule(rule, n), epsilon, seed)
            name = f"inst_N{n}_i{i}.json"
            with open(os.path.join(args.out, name), "w") as fh:
                fh.write(inst.to_json())
                fh.write("\n")
    print(f"wrote {len(ns) * count} instance files to {args.out}")
    return 0


def _cmd_greedy(args) -> int:
    cfg = _load_config(args.config)
    ns = cfg["Ns"]
    rule = cfg["n_c_rule"]
    epsilon = cfg["epsilon"]
    count = cfg["instances_per_n"]
    base_seed = cfg["base_seed"]
    restarts = cfg.get("restarts", 1000)
    wexp = cfg.get("weight_exponent", 2.0)
    if args.dry_run:
        print(f"plan: {len(ns) * count} instances x {restarts} restarts")
        return 0
    q_grid = tuple(Q_GRID) + (1.0,)
    tasks = [(n, i) for n in ns for i in range(count)]

    def one(task):
        n, i = task
        seed = _instance_seed(base_seed, n, i)
        inst = generate_ppsp(n, n_c_from_rule(rule, n), epsilon, seed)
        gcfg = GreedyConfig(restarts=restarts, weight_exponent=wexp, seed=seed)
        result, freqs = restart_search(inst, gcfg, q_grid=q_grid)
        return {"N": n, "index": i, "seed": seed,
                "best_energy": result.best_energy,
                "minima_found": len(result.minima_found),
                "steps_total": result.steps_total,
                "p_gs": freqs[1.0],
                "freqs": {f"{q:.2f}": freqs[q] for q in q_grid}}

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(t) for t in tasks]
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "greedy.json")
    with open(out_path, "w") as fh:
        json.dump({"schema": SCHEMA, "config": cfg, "rows": rows},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    report = run_experiment(cfg, out_dir=args.out, threads=args.threads,
                            dry_run=args.dry_run)
    if report is not None:
        print(f"wrote {report['config']['label']}.csv/.json to {args.out} "
              f"({len(report['runs'])} runs, q_a={report['q_a']})")
    return 0


def _cmd_theory(args) -> int:
    preset = args.preset
    if preset is None and args.config:
        preset = _load_config(args.config).get("preset")
    if preset is None:
        raise ParameterError("theory needs --preset or a config with a preset field")
    if args.dry_run:
        print(f"plan: theory preset {preset}")
        return 0
    path = theory_report(preset, args.out)
    print(f"wrote {path}")
    return 0


def _cmd_analyze(args) -> int:
    cfg = _load_config(args.config)
    paths = cfg["reports"]
    form = cfg.get("form", "plain")
    runs: List[RunSummary] = []
    for p in paths:
        with open(p) as fh:
            report = json.load(fh)
        runs.extend(RunSummary.from_dict(r) for r in report["runs"])
    if args.dry_run:
        print(f"plan: analyze {len(runs)} runs from {len(paths)} report(s)")
        return 0
    curves = aggregate(runs)
    for c in list(curves["q"].values()) + list(curves["d"].values()):
        if len(c.points) >= 4:
            classify_decay(c, form)
    q_a = approx_threshold(curves["q"]) if all(
        c.classification for c in curves["q"].values()) else None
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "analyzed.csv")
    write_csv(csv_path, curves, runs[0].protocol if runs else "",
              cfg.get("n_c_rule_label", ""), runs[0].epsilon if runs else 0.0)
    with open(os.path.join(args.out, "analyzed.json"), "w") as fh:
        json.dump({"schema": SCHEMA, "q_a": q_a, "form": form,
                   "n_runs": len(runs)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} (q_a={q_a})")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="ppspin",
        description="Planted-solution spin-glass benchmarks: instances, "
                    "solvers, protocol simulations, theory tables.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("gen", _cmd_gen), ("greedy", _cmd_greedy),
                     ("run", _cmd_run), ("theory", _cmd_theory),
                     ("analyze", _cmd_analyze)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dry-run", action="store_true",
                       help="print the plan and resource estimate, run nothing")
        if name == "theory":
            p.add_argument("--preset", choices=THEORY_PRESETS)
        p.set_defaults(fn=fn)
    args = ap.parse_args(argv)
    if args.command != "theory" and not args.config:
        ap.error(f"{args.command} requires --config")
    try:
        return args.fn(args)
    except (ParameterError, ResourceError, theory.NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
