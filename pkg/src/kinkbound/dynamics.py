"""Event-driven hard-sphere dynamics in R^n.

N spheres of common radius a move freely between events; at a pair contact
(center distance 2a) the normal velocity components are exchanged.  The
engine is exact: contact times come from a stable quadratic solve, states
advance lazily (a particle's stored position changes only when one of its
own collisions is processed), and the event queue is a heap of
(time, rank, ...) keys with stale entries invalidated by per-particle
collision counters.

Two broad-phase strategies are available -- an exhaustive all-pairs scan
and a cell-list grid -- and they produce byte-identical event logs: every
contact time is a pure function of the two stored particle states
(referred to max of their update times), independent of when or how the
pair was scheduled.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import _jsonio
from ._kernels import contact_times_scan

__all__ = [
    "ConfigurationError",
    "GenericityViolation",
    "SimulationBug",
    "SimConfig",
    "ParticleState",
    "CollisionEvent",
    "EventLog",
    "ValidationReport",
    "validate_configuration",
    "predict_pair_collision",
    "resolve_collision",
    "advance_free",
    "run_simulation",
    "events_jsonl_bytes",
    "write_events_jsonl",
    "read_events_jsonl",
]

EVENTS_FORMAT = "kinkbound-events-v1"

# auto broad phase switches to cell lists above this particle count
_CELL_AUTO_MIN_N = 12


class ConfigurationError(ValueError):
    """Initial data violates the engine's preconditions."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"{report.reason}: {report.detail}")


class GenericityViolation(RuntimeError):
    """More than two bodies in simultaneous contact (at tolerance resolution)."""

    def __init__(self, time: float, particles: tuple):
        self.time = time
        self.particles = particles
        super().__init__(
            f"simultaneous contact of particles {particles} at t={time!r}"
        )


class SimulationBug(AssertionError):
    """Internal consistency check failed (e.g. overlap beyond tolerance)."""


@dataclass
class SimConfig:
    """Engine parameters.

    t_max=None runs until no future event exists.  grazing_tol is relative
    (a contact is discarded when the quadratic discriminant is below
    grazing_tol * (b^2 + A|c|)); overlap_tol is scaled by max(a, 1) into an
    absolute length; time_tie_tol feeds the simultaneity detector.
    broad_phase is "auto" | "allpairs" | "cells" and never affects results.
    """

    n: int
    N: int
    a: float
    t_max: float | None = None
    grazing_tol: float = 1e-14
    overlap_tol: float = 1e-9
    time_tie_tol: float = 1e-12
    broad_phase: str = "auto"

    def header_dict(self) -> dict:
        # broad_phase is deliberately excluded: logs are backend-independent
        return {
            "n": self.n,
            "N": self.N,
            "a": self.a,
            "t_max": self.t_max,
            "grazing_tol": self.grazing_tol,
            "overlap_tol": self.overlap_tol,
            "time_tie_tol": self.time_tie_tol,
        }


@dataclass
class ParticleState:
    """One sphere: position/velocity valid at last_update_time."""

    id: int
    position: np.ndarray
    velocity: np.ndarray
    last_update_time: float = 0.0
    collision_counter: int = 0

    def __post_init__(self):
        self.position = np.array(self.position, dtype=np.float64)
        self.velocity = np.array(self.velocity, dtype=np.float64)
        if self.position.shape != self.velocity.shape or self.position.ndim != 1:
            raise ValueError("position and velocity must be 1-D and congruent")


@dataclass
class CollisionEvent:
    """A resolved binary collision; yi/yj are the centers at contact."""

    t: float
    i: int
    j: int
    yi: np.ndarray
    yj: np.ndarray
    vi: np.ndarray
    vj: np.ndarray
    vi_post: np.ndarray
    vj_post: np.ndarray

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "i": self.i,
            "j": self.j,
            "yi": self.yi,
            "yj": self.yj,
            "vi": self.vi,
            "vj": self.vj,
            "vi_post": self.vi_post,
            "vj_post": self.vj_post,
        }


@dataclass
class EventLog:
    """Simulation output: config, initial states, ordered events, termination."""

    config: SimConfig
    initial: list
    events: list
    termination: str
    provenance: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    ok: bool
    reason: str = ""
    detail: dict = field(default_factory=dict)


def validate_configuration(states, config: SimConfig) -> ValidationReport:
    """Check initial data: shapes, finiteness, distinct ids, no overlap.

    Overlap means a pair at center distance <= 2a; validity requires
    strictly separated spheres (and distinct points when a == 0).
    """
    def bad(reason, **detail):
        return ValidationReport(False, reason, detail)

    if config.n < 1:
        return bad("dimension", n=config.n)
    if config.N != len(states):
        return bad("particle_count", N=config.N, given=len(states))
    if len(states) < 1:
        return bad("particle_count", given=0)
    if config.a < 0 or not np.isfinite(config.a):
        return bad("radius", a=config.a)
    if config.a == 0 and config.n != 1:
        return bad("radius", a=config.a, n=config.n,
                   note="zero radius is only meaningful on the line")
    if config.t_max is not None and not config.t_max > 0:
        return bad("t_max", t_max=config.t_max)
    if config.broad_phase not in ("auto", "allpairs", "cells"):
        return bad("broad_phase", broad_phase=config.broad_phase)
    if config.broad_phase == "cells" and config.n not in (2, 3):
        return bad("broad_phase", broad_phase="cells", n=config.n,
                   note="cell lists are implemented for n in {2, 3}")

    ids = [s.id for s in states]
    if len(set(ids)) != len(ids):
        return bad("duplicate_ids", ids=ids)
    for s in states:
        if s.position.shape != (config.n,) or s.velocity.shape != (config.n,):
            return bad("dimension_mismatch", id=s.id)
        if not (np.all(np.isfinite(s.position)) and np.all(np.isfinite(s.velocity))):
            return bad("non_finite", id=s.id)
        if s.last_update_time != 0.0:
            return bad("nonzero_start_time", id=s.id, t=s.last_update_time)

    pos = np.array([s.position for s in states])
    for i in range(len(states) - 1):
        d = np.linalg.norm(pos[i + 1:] - pos[i], axis=1)
        k = int(np.argmin(d))
        if d[k] <= 2.0 * config.a:
            return bad("overlap", pair=(ids[i], ids[i + 1 + k]),
                       distance=float(d[k]), contact=2.0 * config.a)
    return ValidationReport(True)


def predict_pair_collision(state_i: ParticleState, state_j: ParticleState,
                           a: float, now: float | None = None,
                           grazing_tol: float = 1e-14) -> float | None:
    """Earliest contact time t > now of two spheres, or None.

    None when the pair is receding, never reaches distance 2a, or the
    contact is grazing (discriminant below grazing_tol relative to
    b^2 + A|c|).  The solve uses the stable branch s = c / (-b + sqrt(disc))
    so nearly-touching slow approaches do not lose precision.
    """
    pos = np.ascontiguousarray([state_i.position, state_j.position], dtype=np.float64)
    vel = np.ascontiguousarray([state_i.velocity, state_j.velocity], dtype=np.float64)
    tupd = np.array([state_i.last_update_time, state_j.last_update_time])
    if now is None:
        now = float(tupd.max())
    out = np.empty(1)
    contact_times_scan(pos, vel, tupd, 0, np.array([1], dtype=np.int64),
                       4.0 * a * a, grazing_tol, out)
    t = float(out[0])
    return t if np.isfinite(t) and t > now else None


def resolve_collision(v_i, v_j, u_hat):
    """Exchange normal velocity components along the unit contact normal.

    u_hat points from i to j.  Returns (v_i', v_j') with
    v_i' = v_i + ((v_j - v_i) . u) u and v_j' the mirror image; the shared
    impulse makes momentum conservation exact up to one rounding.
    """
    v_i = np.asarray(v_i, dtype=np.float64)
    v_j = np.asarray(v_j, dtype=np.float64)
    u = np.asarray(u_hat, dtype=np.float64)
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"contact normal is not unit length: |u| = {norm!r}")
    vn = float(np.dot(v_j - v_i, u))
    if vn >= 0.0:
        raise ValueError("pair is not approaching along the contact normal")
    impulse = vn * u
    return v_i + impulse, v_j - impulse


def advance_free(state: ParticleState, t: float) -> ParticleState:
    """Ballistic update of one particle to time t >= last_update_time."""
    if t < state.last_update_time:
        raise ValueError(
            f"cannot advance to t={t} before last update {state.last_update_time}"
        )
    dt = t - state.last_update_time
    return replace(
        state,
        position=state.position + dt * state.velocity,
        velocity=state.velocity.copy(),
        last_update_time=t,
    )


class _CellGrid:
    """Sparse uniform grid over R^n (n = 2 or 3), cell edge 3a.

    Cell adjacency (offset <= 1 per axis) covers the contact distance 2a
    with margin, so a pair is always scheduled strictly before contact.
    """

    def __init__(self, a: float, n: int):
        self.size = 3.0 * a
        self.n = n
        self.cells: dict = {}
        self.offsets = [np.array(o) for o in itertools.product((-1, 0, 1), repeat=n)]

    def coords(self, y: np.ndarray) -> tuple:
        return tuple(int(np.floor(y[k] / self.size)) for k in range(self.n))

    def insert(self, i: int, cell: tuple):
        self.cells.setdefault(cell, set()).add(i)

    def remove(self, i: int, cell: tuple):
        occ = self.cells[cell]
        occ.discard(i)
        if not occ:
            del self.cells[cell]

    def occupants(self, cells) -> list:
        out = []
        for c in cells:
            occ = self.cells.get(c)
            if occ:
                out.extend(occ)
        return out

    def neighborhood(self, cell: tuple) -> list:
        base = np.array(cell)
        return [tuple(base + o) for o in self.offsets]

    def slab(self, cell: tuple, axis: int, direction: int) -> list:
        """Cells newly adjacent after stepping along an axis."""
        ranges = [
            (cell[k] + direction,) if k == axis else (cell[k] - 1, cell[k], cell[k] + 1)
            for k in range(self.n)
        ]
        return [c for c in itertools.product(*ranges)]


class _Engine:
    """One simulation run; see run_simulation."""

    def __init__(self, states, config: SimConfig):
        self.config = config
        N = config.N
        self.ids = np.array([s.id for s in states], dtype=np.int64)
        self.pos = np.ascontiguousarray([s.position for s in states], dtype=np.float64)
        self.vel = np.ascontiguousarray([s.velocity for s in states], dtype=np.float64)
        self.tupd = np.zeros(N)
        self.cc = np.zeros(N, dtype=np.int64)
        self.four_a2 = 4.0 * config.a * config.a
        self.heap: list = []
        self.events: list = []
        self.N = N
        self.n = config.n

        bp = config.broad_phase
        if bp == "auto":
            bp = "cells" if (config.n in (2, 3) and N >= _CELL_AUTO_MIN_N) else "allpairs"
        self.use_cells = bp == "cells"

        if self.use_cells:
            self.grid = _CellGrid(config.a, config.n)
            self.cell_of = [self.grid.coords(self.pos[i]) for i in range(N)]
            for i in range(N):
                self.grid.insert(i, self.cell_of[i])
            self.xc = np.zeros(N, dtype=np.int64)  # crossing epochs
            self.live: dict = {}          # pair -> (cc_i, cc_j) of current prediction
            self.pairs_of = [set() for _ in range(N)]
            for i in range(N):
                cands = [j for j in self.grid.occupants(
                    self.grid.neighborhood(self.cell_of[i])) if j > i]
                self._predict(i, cands)
                self._schedule_crossing(i)
        else:
            self.grid = None
            self.live = None
            for i in range(N - 1):
                self._predict(i, range(i + 1, N))

    # -- scheduling ---------------------------------------------------------

    def _predict(self, i: int, cands) -> None:
        js = np.fromiter(cands, dtype=np.int64)
        if js.size == 0:
            return
        out = np.empty(js.size)
        contact_times_scan(self.pos, self.vel, self.tupd, i, js,
                           self.four_a2, self.config.grazing_tol, out)
        for m in np.flatnonzero(np.isfinite(out)):
            j = int(js[m])
            lo, hi = (i, j) if i < j else (j, i)
            key = (lo, hi)
            entry = (out[m], 0, lo, hi, int(self.cc[lo]), int(self.cc[hi]))
            heapq.heappush(self.heap, entry)
            if self.live is not None:
                self.live[key] = (entry[4], entry[5])
                self.pairs_of[lo].add(key)
                self.pairs_of[hi].add(key)

    def _drop_live(self, i: int) -> None:
        for key in self.pairs_of[i]:
            self.live.pop(key, None)
            other = key[0] + key[1] - i
            self.pairs_of[other].discard(key)
        self.pairs_of[i] = set()

    def _global_sweep(self) -> int:
        """All-pairs rescue scan; returns number of predictions pushed."""
        before = len(self.heap)
        for i in range(self.N - 1):
            self._predict(i, range(i + 1, self.N))
        return len(self.heap) - before

    def _schedule_crossing(self, i: int) -> None:
        best_t = np.inf
        best_code = -1
        cell = self.cell_of[i]
        size = self.grid.size
        for k in range(self.n):
            v = self.vel[i, k]
            if v > 0.0:
                tt = self.tupd[i] + ((cell[k] + 1) * size - self.pos[i, k]) / v
                code = 2 * k + 1
            elif v < 0.0:
                tt = self.tupd[i] + (cell[k] * size - self.pos[i, k]) / v
                code = 2 * k
            else:
                continue
            if tt < best_t:
                best_t, best_code = tt, code
        if best_code >= 0:
            heapq.heappush(self.heap, (best_t, 1, i, best_code, int(self.xc[i]), 0))

    # -- event processing ---------------------------------------------------

    def _advance(self, i: int, t: float) -> None:
        self.pos[i] += (t - self.tupd[i]) * self.vel[i]
        self.tupd[i] = t

    def _check_third_bodies(self, t: float, i: int, j: int) -> None:
        """Abort when any third particle is in contact with i or j at t."""
        if self.N <= 2:
            return
        P = self.pos + (t - self.tupd)[:, None] * self.vel
        speeds = np.linalg.norm(self.vel, axis=1)
        twoa = 2.0 * self.config.a
        tie = self.config.time_tie_tol
        for p in (i, j):
            d = np.linalg.norm(P - P[p], axis=1)
            near = d <= twoa + tie * (speeds + speeds[p])
            near[i] = near[j] = False
            if near.any():
                culprits = tuple(int(self.ids[k]) for k in np.flatnonzero(near))
                raise GenericityViolation(
                    t, (int(self.ids[i]), int(self.ids[j])) + culprits)

    def _collide(self, t: float, i: int, j: int) -> None:
        self._advance(i, t)
        self._advance(j, t)
        dy = self.pos[j] - self.pos[i]
        dist = float(np.linalg.norm(dy))
        a = self.config.a
        tol = self.config.overlap_tol * max(a, 1.0)
        if abs(dist - 2.0 * a) > tol:
            raise SimulationBug(
                f"contact distance {dist!r} vs 2a={2 * a!r} at t={t!r} "
                f"for pair ({i}, {j})"
            )
        vi = self.vel[i].copy()
        vj = self.vel[j].copy()
        if a > 0.0:
            u = dy / dist
            vn = float(np.dot(vj - vi, u))
            impulse = vn * u
            vi_post = vi + impulse
            vj_post = vj - impulse
        else:
            # point particles on the line swap velocities exactly; the
            # normal is the approach direction (centers coincide at contact)
            u = np.array([1.0 if vi[0] > vj[0] else -1.0])
            vi_post = vj.copy()
            vj_post = vi.copy()
        if float(np.dot(vj_post - vi_post, u)) <= 0.0:
            raise SimulationBug(f"pair ({i}, {j}) not separating after collision")
        self.vel[i] = vi_post
        self.vel[j] = vj_post
        self.cc[i] += 1
        self.cc[j] += 1
        self._check_third_bodies(t, i, j)
        self.events.append(CollisionEvent(
            t=float(t), i=int(self.ids[i]), j=int(self.ids[j]),
            yi=self.pos[i].copy(), yj=self.pos[j].copy(),
            vi=vi, vj=vj, vi_post=vi_post.copy(), vj_post=vj_post.copy(),
        ))

    def _reschedule_after_collision(self, i: int, j: int) -> None:
        if self.use_cells:
            for p in (i, j):
                self._drop_live(p)
            for p in (i, j):
                self.xc[p] += 1
                self._schedule_crossing(p)
                cands = [q for q in self.grid.occupants(
                    self.grid.neighborhood(self.cell_of[p])) if q != p]
                self._predict(p, cands)
        else:
            allv = np.arange(self.N)
            for p in (i, j):
                self._predict(p, allv[allv != p])

    def _cross(self, i: int, code: int) -> None:
        axis, direction = code >> 1, (1 if code & 1 else -1)
        old = self.cell_of[i]
        new = list(old)
        new[axis] += direction
        new = tuple(new)
        self.grid.remove(i, old)
        self.grid.insert(i, new)
        self.cell_of[i] = new
        self.xc[i] += 1
        self._schedule_crossing(i)
        cands = [q for q in self.grid.occupants(
            self.grid.slab(new, axis, direction)) if q != i]
        self._predict(i, cands)

    def run(self) -> tuple:
        t_max = self.config.t_max
        termination = "queue_empty"
        while self.heap:
            entry = heapq.heappop(self.heap)
            if t_max is not None and entry[0] > t_max:
                termination = "t_max"
                break
            if entry[1] == 0:
                t, _, i, j, ci, cj = entry
                if self.cc[i] != ci or self.cc[j] != cj:
                    continue
                self._collide(t, i, j)
                self._reschedule_after_collision(i, j)
            else:
                t, _, i, code, epoch, _ = entry
                if self.xc[i] != epoch:
                    continue
                if self.live is not None and not self.live:
                    if self._global_sweep() == 0:
                        termination = "queue_empty"
                        break
                self._cross(i, code)
        return self.events, termination


def run_simulation(states, config: SimConfig) -> EventLog:
    """Run to completion (queue empty) or to config.t_max.

    Raises ConfigurationError on invalid initial data, GenericityViolation
    when a third body touches a colliding pair within tolerance, and
    SimulationBug if internal guards (overlap, separation) trip.
    """
    report = validate_configuration(states, config)
    if not report.ok:
        raise ConfigurationError(report)
    initial = [
        ParticleState(s.id, s.position.copy(), s.velocity.copy(), 0.0, 0)
        for s in states
    ]
    events, termination = _Engine(states, config).run()
    return EventLog(config=config, initial=initial, events=events,
                    termination=termination)


# -- serialization ----------------------------------------------------------


def events_jsonl_bytes(log: EventLog) -> bytes:
    """Canonical JSONL encoding (header, events, footer); floats %.17g."""
    lines = []
    header = {
        "kind": "header",
        "format": EVENTS_FORMAT,
        "config": log.config.header_dict(),
        "provenance": log.provenance,
        "initial": [
            {"id": s.id, "y": s.position, "v": s.velocity} for s in log.initial
        ],
    }
    lines.append(_jsonio.dumps(header))
    for ev in log.events:
        lines.append(_jsonio.dumps(ev.to_dict()))
    footer = {"kind": "footer", "events": len(log.events),
              "termination": log.termination}
    lines.append(_jsonio.dumps(footer))
    return ("\n".join(lines) + "\n").encode()


def write_events_jsonl(log: EventLog, path) -> None:
    with open(path, "wb") as fh:
        fh.write(events_jsonl_bytes(log))


def read_events_jsonl(path) -> EventLog:
    with open(path, "rb") as fh:
        lines = fh.read().decode().splitlines()
    if len(lines) < 2:
        raise ValueError("truncated event log")
    header = json.loads(lines[0])
    footer = json.loads(lines[-1])
    if header.get("kind") != "header" or footer.get("kind") != "footer":
        raise ValueError("malformed event log framing")
    if header.get("format") != EVENTS_FORMAT:
        raise ValueError(f"unknown event log format {header.get('format')!r}")
    cfg = header["config"]
    config = SimConfig(
        n=cfg["n"], N=cfg["N"], a=cfg["a"], t_max=cfg["t_max"],
        grazing_tol=cfg["grazing_tol"], overlap_tol=cfg["overlap_tol"],
        time_tie_tol=cfg["time_tie_tol"],
    )
    initial = [
        ParticleState(rec["id"], rec["y"], rec["v"]) for rec in header["initial"]
    ]
    events = []
    for line in lines[1:-1]:
        d = json.loads(line)
        events.append(CollisionEvent(
            t=float(d["t"]), i=d["i"], j=d["j"],
            yi=np.array(d["yi"], dtype=np.float64),
            yj=np.array(d["yj"], dtype=np.float64),
            vi=np.array(d["vi"], dtype=np.float64),
            vj=np.array(d["vj"], dtype=np.float64),
            vi_post=np.array(d["vi_post"], dtype=np.float64),
            vj_post=np.array(d["vj_post"], dtype=np.float64),
        ))
    if footer["events"] != len(events):
        raise ValueError("event count mismatch between footer and body")
    return EventLog(config=config, initial=initial, events=events,
                    termination=footer["termination"],
                    provenance=header.get("provenance", {}))
