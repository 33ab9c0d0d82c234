"""Scenario generation, experiment driving, sweeps, and frame transforms.

Scenarios are pure functions of (parameters, seed); the RNG is numpy's
counter-based Philox so identical seeds give identical initial data on
any platform, and the algorithm name travels in the log provenance.
"""

from __future__ import annotations

import csv
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _jsonio
from .dynamics import (EventLog, ParticleState, SimConfig, run_simulation,
                       write_events_jsonl)
from .ledger import build_ledger, build_report, bulk_invariants, bound_report, \
    classify_kinks, write_ledger_csv
from .tensor import audit_tensor, build_tensor

__all__ = [
    "PackingError",
    "Scenario",
    "SweepSpec",
    "gen_random_gas",
    "gen_line_1d",
    "gen_explicit",
    "apply_boost",
    "apply_time_scale",
    "scenario_from_config",
    "run_experiment",
    "sweep",
    "default_workers",
]

RNG_ALGORITHM = "numpy-philox4x64"
_PACKING_ATTEMPT_CAP = 100_000


class PackingError(ValueError):
    """Rejection sampling could not place all spheres."""


@dataclass
class Scenario:
    config: SimConfig
    states: list
    provenance: dict = field(default_factory=dict)


@dataclass
class SweepSpec:
    """Grid of runs: one per (size, seed).

    sizes is the generator's size parameter (N for random_gas, p for
    line_1d).  base carries the remaining generator parameters; for
    random_gas with a box_policy of kind "fixed_fraction" the box is
    resized per N to hold the covering fraction constant.
    """

    sizes: list
    seeds: list
    base: dict
    epsilon: float = 1.0
    t_max: float | None = None

    def __post_init__(self):
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be a nonempty list of positive ints")
        if not self.seeds:
            raise ValueError("need at least one seed")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _draw_velocities(gen, dist: dict, N: int, n: int) -> np.ndarray:
    kind = dist.get("kind", "maxwell")
    if kind == "maxwell":
        return gen.normal(0.0, float(dist.get("sigma", 1.0)), size=(N, n))
    if kind == "uniform":
        v0 = float(dist.get("v0", 1.0))
        return gen.uniform(-v0, v0, size=(N, n))
    if kind == "explicit":
        v = np.asarray(dist["values"], dtype=np.float64)
        if v.shape != (N, n):
            raise ValueError(f"explicit velocities must be shape {(N, n)}")
        return v
    raise ValueError(f"unknown velocity distribution {kind!r}")


def gen_random_gas(n: int, N: int, box, a: float, velocity_dist: dict,
                   seed: int) -> Scenario:
    """Uniform non-overlapping spheres in [0, box] with drawn velocities.

    Placement is rejection sampling with a global attempt cap; packings
    too dense to place raise PackingError.
    """
    box = np.broadcast_to(np.asarray(box, dtype=np.float64), (n,))
    if np.any(box <= 0):
        raise ValueError("box sides must be positive")
    gen = _rng(seed)
    placed = np.empty((N, n))
    min_dist = 2.0 * a * (1.0 + 1e-9)  # strict separation for clean starts
    attempts = 0
    for i in range(N):
        while True:
            attempts += 1
            if attempts > _PACKING_ATTEMPT_CAP:
                raise PackingError(
                    f"could not place sphere {i} of {N} within "
                    f"{_PACKING_ATTEMPT_CAP} attempts (box {box.tolist()}, a={a})"
                )
            cand = gen.random(n) * box
            if i == 0 or np.all(
                    np.linalg.norm(placed[:i] - cand, axis=1) > min_dist):
                placed[i] = cand
                break
    vel = _draw_velocities(gen, velocity_dist, N, n)
    states = [ParticleState(i, placed[i], vel[i]) for i in range(N)]
    config = SimConfig(n=n, N=N, a=a)
    return Scenario(config=config, states=states, provenance={
        "generator": "random_gas",
        "rng": RNG_ALGORITHM,
        "seed": int(seed),
        "params": {"n": n, "N": N, "a": a, "box": box.tolist(),
                   "velocities": velocity_dist},
    })


def gen_line_1d(p: int) -> Scenario:
    """2p point particles on the line: p right-movers at -1..-p with
    velocity +1 facing p left-movers at +1..+p with velocity -1.

    Every right-mover meets every left-mover, so exactly p^2 collisions
    occur and each kink has |v'-v| = 2.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    states = []
    for k in range(p):
        states.append(ParticleState(k, [-(k + 1.0)], [1.0]))
    for k in range(p):
        states.append(ParticleState(p + k, [k + 1.0], [-1.0]))
    config = SimConfig(n=1, N=2 * p, a=0.0)
    return Scenario(config=config, states=states, provenance={
        "generator": "line_1d", "rng": None, "seed": None, "params": {"p": p},
    })


def gen_explicit(n: int, a: float, positions, velocities,
                 t_max: float | None = None) -> Scenario:
    positions = np.asarray(positions, dtype=np.float64)
    velocities = np.asarray(velocities, dtype=np.float64)
    if positions.shape != velocities.shape or positions.ndim != 2:
        raise ValueError("positions and velocities must both be (N, n)")
    N = positions.shape[0]
    states = [ParticleState(i, positions[i], velocities[i]) for i in range(N)]
    config = SimConfig(n=n, N=N, a=a, t_max=t_max)
    return Scenario(config=config, states=states, provenance={
        "generator": "explicit", "rng": None, "seed": None,
        "params": {"n": n, "N": N, "a": a},
    })


def apply_boost(scenario: Scenario, w0) -> Scenario:
    """Shift every velocity by w0 (positions unchanged)."""
    w0 = np.broadcast_to(np.asarray(w0, dtype=np.float64), (scenario.config.n,))
    states = [
        ParticleState(s.id, s.position.copy(), s.velocity + w0)
        for s in scenario.states
    ]
    prov = dict(scenario.provenance)
    prov["boost"] = w0.tolist()
    return Scenario(config=scenario.config, states=states, provenance=prov)


def apply_time_scale(scenario: Scenario, mu: float) -> Scenario:
    """Speed the movie up by mu: velocities scale by mu, positions fixed.

    Collision times map to t/mu and every velocity jump scales by mu.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    states = [
        ParticleState(s.id, s.position.copy(), mu * s.velocity)
        for s in scenario.states
    ]
    prov = dict(scenario.provenance)
    prov["time_scale"] = float(mu)
    return Scenario(config=scenario.config, states=states, provenance=prov)


# -- config ingestion --------------------------------------------------------


def scenario_from_config(doc: dict) -> tuple:
    """Build (Scenario, sim options dict) from a config document.

    Schema (README has the full story): {"scenario": {...}, "sim": {...},
    "ledger": {"epsilon": x}, "boost": [...], "time_scale": mu}.
    """
    sc = doc.get("scenario")
    if not isinstance(sc, dict):
        raise ValueError('config needs a "scenario" object')
    generator = sc.get("generator", "random_gas")
    if generator == "random_gas":
        scenario = gen_random_gas(
            n=int(sc.get("n", 2)), N=int(sc["N"]), box=sc.get("box", 1.0),
            a=float(sc["a"]), velocity_dist=sc.get("velocities",
                                                   {"kind": "maxwell", "sigma": 1.0}),
            seed=int(sc.get("seed", 0)),
        )
    elif generator == "line_1d":
        scenario = gen_line_1d(int(sc["p"]))
    elif generator == "explicit":
        scenario = gen_explicit(
            n=int(sc["n"]), a=float(sc["a"]),
            positions=sc["positions"], velocities=sc["velocities"],
        )
    else:
        raise ValueError(f"unknown generator {generator!r}")

    if "boost" in doc:
        scenario = apply_boost(scenario, doc["boost"])
    if "time_scale" in doc:
        scenario = apply_time_scale(scenario, doc["time_scale"])

    sim = doc.get("sim", {})
    cfg = scenario.config
    scenario.config = SimConfig(
        n=cfg.n, N=cfg.N, a=cfg.a,
        t_max=sim.get("t_max", cfg.t_max),
        grazing_tol=float(sim.get("grazing_tol", cfg.grazing_tol)),
        overlap_tol=float(sim.get("overlap_tol", cfg.overlap_tol)),
        time_tie_tol=float(sim.get("time_tie_tol", cfg.time_tie_tol)),
        broad_phase=sim.get("broad_phase", cfg.broad_phase),
    )
    options = {"epsilon": float(doc.get("ledger", {}).get("epsilon", 1.0))}
    return scenario, options


def simulate_scenario(scenario: Scenario) -> EventLog:
    log = run_simulation(scenario.states, scenario.config)
    log.provenance = scenario.provenance
    return log


def _audit_window(log: EventLog) -> tuple:
    t_end = log.events[-1].t if log.events else 1.0
    pad = 0.05 * (t_end + 1.0)
    return (-pad, t_end + pad)


def run_experiment(config: dict, out_dir) -> dict:
    """Simulate one config and write events.jsonl, ledger.csv, report.json,
    audit.json into out_dir.  Returns paths plus a small summary."""
    scenario, options = scenario_from_config(config)
    log = simulate_scenario(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in
             ("events.jsonl", "ledger.csv", "report.json", "audit.json")}
    write_events_jsonl(log, paths["events.jsonl"])
    ledger = build_ledger(log)
    write_ledger_csv(ledger, paths["ledger.csv"])
    report = build_report(log, epsilon=options["epsilon"])
    paths["report.json"].write_text(_jsonio.dumps(report) + "\n")
    audit = audit_tensor(build_tensor(log, _audit_window(log)))
    paths["audit.json"].write_text(_jsonio.dumps(audit) + "\n")
    return {
        "paths": {k: str(v) for k, v in paths.items()},
        "events": len(log.events),
        "termination": log.termination,
        "ratio1": report["ratio1"],
        "ratio2": report["ratio2"],
    }


# -- sweeps ------------------------------------------------------------------


def default_workers() -> int:
    cap = os.environ.get("KINKBOUND_THREADS", "").strip()
    cpus = os.cpu_count() or 1
    if cap:
        return max(1, min(int(cap), cpus))
    return cpus


def _fixed_fraction_box(n: int, N: int, a: float, fraction: float):
    """Box side at constant covering fraction (area/volume occupied)."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    if a <= 0:
        raise ValueError("fixed_fraction needs a > 0")
    if n == 2:
        side = a * np.sqrt(np.pi * N / fraction)
    elif n == 3:
        side = a * (4.0 * np.pi * N / (3.0 * fraction)) ** (1.0 / 3.0)
    elif n == 1:
        side = 2.0 * a * N / fraction
    else:
        raise ValueError(f"unsupported dimension {n}")
    return [float(side)] * n


def _sweep_scenario(base: dict, size: int, seed: int,
                    t_max: float | None) -> Scenario:
    generator = base.get("generator", "random_gas")
    if generator == "line_1d":
        scenario = gen_line_1d(size)
    elif generator == "random_gas":
        n = int(base.get("n", 2))
        a = float(base["a"])
        policy = base.get("box_policy", {"kind": "fixed_box", "sides": base.get("box")})
        if policy["kind"] == "fixed_fraction":
            box = _fixed_fraction_box(n, size, a, float(policy["value"]))
        elif policy["kind"] == "fixed_box":
            box = policy["sides"]
        else:
            raise ValueError(f"unknown box policy {policy['kind']!r}")
        scenario = gen_random_gas(
            n=n, N=size, box=box, a=a,
            velocity_dist=base.get("velocities", {"kind": "maxwell", "sigma": 1.0}),
            seed=seed,
        )
    else:
        raise ValueError(f"unknown sweep generator {generator!r}")
    if t_max is not None:
        cfg = scenario.config
        scenario.config = SimConfig(n=cfg.n, N=cfg.N, a=cfg.a, t_max=t_max,
                                    grazing_tol=cfg.grazing_tol,
                                    overlap_tol=cfg.overlap_tol,
                                    time_tie_tol=cfg.time_tie_tol,
                                    broad_phase=cfg.broad_phase)
    return scenario


def _sweep_run(args) -> dict:
    base, size, seed, epsilon, t_max = args
    scenario = _sweep_scenario(base, size, seed, t_max)
    log = simulate_scenario(scenario)
    inv = bulk_invariants(log.initial)
    ledger = build_ledger(log)
    rep = bound_report(ledger, inv, len(log.initial))
    cls = classify_kinks(ledger, inv, epsilon)
    return {
        "N": len(log.initial), "size": size, "seed": seed,
        "events": len(log.events),
        "ratio1": rep.ratio1,
        "ratio2": rep.ratio2 if rep.ratio2_defined else None,
        "strong": cls.strong, "weak": cls.weak,
    }


@dataclass
class SweepResult:
    rows: list
    medians: dict   # size -> median ratio1 across seeds


def sweep(spec: SweepSpec, out_dir=None, workers: int | None = None) -> SweepResult:
    """Run the (size x seed) grid, aggregate median ratio1 per size.

    Rows are sorted by (N, seed) regardless of completion order; workers
    defaults to cpu count capped by KINKBOUND_THREADS.
    """
    tasks = [(spec.base, int(size), int(seed), spec.epsilon, spec.t_max)
             for size in spec.sizes for seed in spec.seeds]
    if workers is None:
        workers = default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_run, tasks))
    else:
        rows = [_sweep_run(t) for t in tasks]
    rows.sort(key=lambda r: (r["N"], r["seed"]))
    medians = {}
    for size in spec.sizes:
        vals = [r["ratio1"] for r in rows if r["size"] == size]
        medians[int(size)] = float(statistics.median(vals))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "ratios.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["N", "size", "seed", "events", "ratio1",
                             "ratio2", "strong", "weak"])
            for r in rows:
                writer.writerow([
                    r["N"], r["size"], r["seed"], r["events"],
                    format(r["ratio1"], ".17g"),
                    "" if r["ratio2"] is None else format(r["ratio2"], ".17g"),
                    r["strong"], r["weak"],
                ])
    return SweepResult(rows=rows, medians=medians)
