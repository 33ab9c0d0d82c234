"""Spacetime mass-momentum graph tensors.

An event log becomes a weighted graph in R^(1+n) (time is coordinate 0):

* trajectory edges between consecutive kinks of one particle, weight
  |V| = sqrt(1+|v|^2) along the lifted velocity V = (1, v);
* one "colliton" per collision -- a constant-time edge joining the two
  centers (spatial length 2a), weight |v'-v|, carrying the exchanged
  momentum so the graph is divergence-free at every interior vertex;
* optionally, augmentation segments at kink vertices (build_augmented):
  n-1 balanced +/- half-edge pairs spanning the orthogonal complement of
  Span(V, V'), which add a known total divergence mass 2(n-1)*sum(b).

The divergence atom at a vertex is m(x*) = sum of a_J eta_J over incident
edges with eta_J oriented away from x*; interior vertices of a valid
tensor balance to roundoff.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .kernel import lift
from .ledger import bulk_invariants

__all__ = [
    "TensorEdge",
    "KinkSite",
    "GraphTensor",
    "VertexBalance",
    "SliceTrace",
    "build_tensor",
    "vertex_balances",
    "weak_divergence",
    "slice_trace",
    "build_augmented",
    "complement_basis",
    "audit_tensor",
]


@dataclass
class TensorEdge:
    """Weighted segment in spacetime; kind: trajectory | colliton | augmentation.

    direction is stored rather than recomputed from the endpoints: a short
    segment far from the origin loses ~eps*|x|/|x_end - x_start| relative
    accuracy to cancellation, which is exactly the quantity the balance
    audits need at full precision.
    """

    x_start: np.ndarray
    x_end: np.ndarray
    weight: float
    kind: str
    direction: np.ndarray = None

    def __post_init__(self):
        if self.direction is None:
            d = self.x_end - self.x_start
            self.direction = d / np.linalg.norm(d)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x_start": self.x_start,
                "x_end": self.x_end, "weight": self.weight}


@dataclass
class KinkSite:
    """One participant's velocity jump: vertex (t*, y) with v -> v_post."""

    vertex: np.ndarray
    v: np.ndarray
    v_post: np.ndarray


@dataclass
class GraphTensor:
    edges: list
    window: tuple
    n: int
    kinks: list = field(default_factory=list)
    mass_energy: float | None = None   # M + E of the underlying log
    div_mass: float = 0.0              # added by augmentation, 0 for plain tensors


@dataclass
class VertexBalance:
    x: np.ndarray
    m: np.ndarray
    weight_scale: float       # sum of incident edge weights
    degree: int
    category: str             # interior | boundary | augment_tip


@dataclass
class SliceTrace:
    """Crossing vectors of a constant-time slice.

    Each trajectory edge crossing deposits a_J eta_J = V = (1, v): its time
    component is the particle's unit mass, its spatial part the momentum.
    total sums the vector norms sqrt(1+|v|^2) (bounded by M+E); mass sums
    the time components (= particle count, constant across slices).
    """

    crossings: list            # (point, vector) pairs
    total: float
    mass: float


def _time_tol(*times) -> float:
    return 1e-12 * max(1.0, *(abs(t) for t in times))


def build_tensor(log, window) -> GraphTensor:
    """Graph tensor of a log restricted to a time window.

    Trajectories are ballistic outside the logged range, so windows may
    extend past the last event (or before 0).  Window boundaries must not
    hit a collision time.
    """
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise ValueError(f"empty window ({t_lo}, {t_hi})")
    for ev in log.events:
        if min(abs(ev.t - t_lo), abs(ev.t - t_hi)) <= _time_tol(ev.t, t_lo, t_hi):
            raise ValueError(f"window boundary hits collision at t={ev.t!r}")

    n = log.config.n
    # per-particle breakpoints (t_k, y_k, v_k): velocity v_k holds on [t_k, t_{k+1})
    breaks = {s.id: [(0.0, s.position, s.velocity)] for s in log.initial}
    for ev in log.events:
        breaks[ev.i].append((ev.t, ev.yi, ev.vi_post))
        breaks[ev.j].append((ev.t, ev.yj, ev.vj_post))

    edges = []
    for s in log.initial:
        chain = breaks[s.id]
        for k, (tk, yk, vk) in enumerate(chain):
            te = chain[k + 1][0] if k + 1 < len(chain) else np.inf
            ts = tk if k > 0 else -np.inf  # first segment extends backward
            lo = max(ts, t_lo)
            hi = min(te, t_hi)
            if not lo < hi:
                continue
            x0 = np.concatenate(([lo], yk + (lo - tk) * vk))
            x1 = np.concatenate(([hi], yk + (hi - tk) * vk))
            V = np.concatenate(([1.0], vk))
            w = float(np.linalg.norm(V))
            edges.append(TensorEdge(x0, x1, w, "trajectory", V / w))

    kinks = []
    a = log.config.a
    for ev in log.events:
        if not t_lo < ev.t < t_hi:
            continue
        dv = float(np.linalg.norm(ev.vi_post - ev.vi))
        if a > 0.0:
            u = np.concatenate(([0.0], ev.yj - ev.yi))
            edges.append(TensorEdge(
                np.concatenate(([ev.t], ev.yi)),
                np.concatenate(([ev.t], ev.yj)),
                dv, "colliton", u / np.linalg.norm(u)))
        # a == 0: the two centers coincide, the four lines meet at one point
        kinks.append(KinkSite(np.concatenate(([ev.t], ev.yi)), ev.vi, ev.vi_post))
        kinks.append(KinkSite(np.concatenate(([ev.t], ev.yj)), ev.vj, ev.vj_post))

    inv = bulk_invariants(log.initial)
    return GraphTensor(edges=edges, window=(t_lo, t_hi), n=n, kinks=kinks,
                       mass_energy=inv.M + inv.E)


def _grouped_vertices(T: GraphTensor):
    """Deduplicate edge endpoints; exact float match first, then a
    tolerance sweep (1e-12 * coordinate scale) merging stragglers."""
    raw = []
    for e in T.edges:
        raw.append(e.x_start)
        raw.append(e.x_end)
    scale = max(1.0, max(float(np.max(np.abs(x))) for x in raw))
    tol = 1e-12 * scale
    groups: dict = {}
    for idx, x in enumerate(raw):
        groups.setdefault(x.tobytes(), []).append(idx)
    reps = {key: raw[members[0]] for key, members in groups.items()}
    keys = list(groups)
    if len(keys) > 1:
        from scipy.spatial import cKDTree

        pts = np.array([reps[k] for k in keys])
        parent = list(range(len(keys)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in cKDTree(pts).query_pairs(tol):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        merged: dict = {}
        for k, key in enumerate(keys):
            root = keys[find(k)]
            merged.setdefault(root, []).extend(groups[key])
        groups = merged
    return raw, groups, tol


def vertex_balances(T: GraphTensor) -> list:
    """Divergence atom m(x*) per vertex: each incident edge contributes its
    weight times its direction oriented toward the vertex (+a_J eta_J for an
    arriving edge, -a_J eta_J for a departing one).

    Interior vertices of a conservative tensor balance to zero; a free edge
    crossing the window reports m = -V at the lower boundary and m = +V at
    the upper one, so the time components of the boundary balances recover
    the slice mass.
    """
    raw, groups, _ = _grouped_vertices(T)
    t_lo, t_hi = T.window
    tol_t = _time_tol(t_lo, t_hi)
    out = []
    for key, members in groups.items():
        x = raw[members[0]]
        m = np.zeros(1 + T.n)
        scale = 0.0
        kinds = set()
        for idx in members:
            e = T.edges[idx // 2]
            u = e.weight * e.direction
            m += -u if idx % 2 == 0 else u  # even index = edge start (departing)
            scale += e.weight
            kinds.add(e.kind)
        if min(abs(x[0] - t_lo), abs(x[0] - t_hi)) <= tol_t:
            category = "boundary"
        elif kinds == {"augmentation"} and len(members) == 1:
            category = "augment_tip"
        else:
            category = "interior"
        out.append(VertexBalance(x=x, m=m, weight_scale=scale,
                                 degree=len(members), category=category))
    return out


def weak_divergence(T: GraphTensor, phi) -> np.ndarray:
    """Pairing of the divergence with a scalar test function:
    sum_J a_J (phi(x_end) - phi(x_start)) eta_J.

    Equal to sum_x* phi(x*) m(x*) over the balances of vertex_balances;
    vanishes when phi is supported away from unbalanced vertices (window
    boundaries, augmentation tips).
    """
    acc = np.zeros(1 + T.n)
    for e in T.edges:
        acc += e.weight * (phi(e.x_end) - phi(e.x_start)) * e.direction
    return acc


def slice_trace(T: GraphTensor, t: float) -> SliceTrace:
    """Trajectory-edge crossings of the hyperplane {time = t}.

    t must lie strictly inside the window, away from collision times.
    The sum of crossing-vector norms is checked against M + E.
    """
    t_lo, t_hi = T.window
    if not t_lo < t < t_hi:
        raise ValueError(f"slice time {t} outside window ({t_lo}, {t_hi})")
    for k in T.kinks:
        if abs(t - k.vertex[0]) <= _time_tol(t, k.vertex[0]):
            raise ValueError(f"slice time {t} hits a collision at {k.vertex[0]!r}")
    crossings = []
    total = 0.0
    mass = 0.0
    for e in T.edges:
        if e.kind != "trajectory":
            continue
        ts, te = e.x_start[0], e.x_end[0]
        if not ts < t < te:
            continue
        point = e.x_start + ((t - ts) / (te - ts)) * (e.x_end - e.x_start)
        vec = e.weight * e.direction
        crossings.append((point, vec))
        total += e.weight
        mass += vec[0]
    if T.mass_energy is not None and total > T.mass_energy + 1e-12:
        raise AssertionError(
            f"slice mass {total} exceeds M+E={T.mass_energy}")
    return SliceTrace(crossings=crossings, total=total, mass=mass)


def complement_basis(V, V2, n: int) -> np.ndarray:
    """Deterministic orthonormal basis of Span(V, V2)^perp in R^(1+n).

    Coordinate axes are orthogonalized against Span(V, V2), then taken in
    decreasing residual-norm order (stable) and orthonormalized against
    each other until n-1 directions are found.
    """
    V = np.asarray(V, dtype=np.float64)
    V2 = np.asarray(V2, dtype=np.float64)
    u1 = V / np.linalg.norm(V)
    r = V2 - np.dot(V2, u1) * u1
    nr = np.linalg.norm(r)
    if nr <= 1e-14 * np.linalg.norm(V2):
        raise ValueError("V and V2 are parallel: no 2-plane to complement")
    u2 = r / nr
    d = 1 + n
    resid = np.eye(d)
    resid -= np.outer(resid @ u1, u1)
    resid -= np.outer(resid @ u2, u2)
    order = np.argsort(-np.linalg.norm(resid, axis=1), kind="stable")
    basis = []
    for idx in order:
        w = resid[idx].copy()
        for z in basis:
            w -= np.dot(w, z) * z
        nw = np.linalg.norm(w)
        if nw > 1e-10:
            basis.append(w / nw)
        if len(basis) == n - 1:
            break
    if len(basis) != n - 1:
        raise ValueError("failed to complete orthonormal complement")
    return np.array(basis)


def _point_segment_distance(p, a, b) -> float:
    d = b - a
    L2 = float(np.dot(d, d))
    if L2 == 0.0:
        return float(np.linalg.norm(p - a))
    s = float(np.dot(p - a, d)) / L2
    s = min(1.0, max(0.0, s))
    return float(np.linalg.norm(p - (a + s * d)))


def _default_eps(T: GraphTensor, sites) -> np.ndarray:
    """0.49 x clearance: nearest support away from the kink, window walls."""
    t_lo, t_hi = T.window
    verts = [s.vertex for s in sites]
    eps = np.empty(len(sites))
    for k, s in enumerate(sites):
        x = s.vertex
        best = min(x[0] - t_lo, t_hi - x[0])
        for other in verts:
            dd = float(np.linalg.norm(other - x))
            if dd > 0.0:
                best = min(best, dd)
        for e in T.edges:
            # skip edges incident to this kink: they meet it at distance 0
            if (np.array_equal(e.x_start, x) or np.array_equal(e.x_end, x)):
                continue
            best = min(best, _point_segment_distance(x, e.x_start, e.x_end))
        if best <= 0.0:
            raise ValueError(f"no room for segments at kink {x}")
        eps[k] = 0.49 * best
    return eps


def build_augmented(T: GraphTensor, kinks=None, b=1.0, eps_seg=None) -> GraphTensor:
    """Add n-1 balanced segment pairs at each kink vertex.

    Every segment contributes two half-edges (x*, x* +/- eps z_j) of weight
    b, with {z_j} an orthonormal basis of Span(V, V')^perp; the +/- pairing
    keeps the kink balanced while each far endpoint carries divergence b,
    for a total added divergence mass of exactly 2(n-1) * sum(b).
    """
    if T.n < 2:
        raise ValueError("augmentation needs n >= 2 (empty complement on the line)")
    sites = list(T.kinks) if kinks is None else list(kinks)
    if not sites:
        return GraphTensor(edges=list(T.edges), window=T.window, n=T.n,
                           kinks=list(T.kinks), mass_energy=T.mass_energy,
                           div_mass=T.div_mass)
    bs = np.broadcast_to(np.asarray(b, dtype=np.float64), (len(sites),))
    if not np.all(bs > 0):
        raise ValueError("segment weight b must be positive")
    if eps_seg is None:
        eps = _default_eps(T, sites)
    else:
        eps = np.broadcast_to(np.asarray(eps_seg, dtype=np.float64),
                              (len(sites),)).copy()
        limit = _default_eps(T, sites) / 0.49
        if np.any(eps <= 0) or np.any(eps >= limit):
            raise ValueError("eps_seg infeasible: segments would leave the "
                             "window or touch the tensor away from their kink")
        for p in range(len(sites)):
            for q in range(p + 1, len(sites)):
                gap = float(np.linalg.norm(sites[p].vertex - sites[q].vertex))
                if gap > 0.0 and eps[p] + eps[q] >= gap:
                    raise ValueError("eps_seg infeasible: segment balls overlap")

    edges = list(T.edges)
    total_b = 0.0
    for s, bk, ek in zip(sites, bs, eps):
        Z = complement_basis(lift(s.v), lift(s.v_post), T.n)
        for z in Z:
            edges.append(TensorEdge(s.vertex.copy(), s.vertex + ek * z,
                                    float(bk), "augmentation", z))
            edges.append(TensorEdge(s.vertex.copy(), s.vertex - ek * z,
                                    float(bk), "augmentation", -z))
        total_b += float(bk)
    return GraphTensor(edges=edges, window=T.window, n=T.n,
                       kinks=list(T.kinks), mass_energy=T.mass_energy,
                       div_mass=T.div_mass + 2.0 * (T.n - 1) * total_b)


def audit_tensor(T: GraphTensor, n_slices: int = 10) -> dict:
    """Summary audit: worst normalized interior balance, slice traces at
    n_slices deterministic times (both the conserved mass row and the total
    crossing weight), and the recorded divergence mass."""
    worst = 0.0
    for vb in vertex_balances(T):
        if vb.category == "interior" and vb.weight_scale > 0:
            worst = max(worst, float(np.linalg.norm(vb.m)) / vb.weight_scale)
    t_lo, t_hi = T.window
    kink_times = sorted({float(k.vertex[0]) for k in T.kinks})
    traces = []
    totals = []
    for k in range(n_slices):
        t = t_lo + (k + 0.5) * (t_hi - t_lo) / n_slices
        if kink_times:
            # nudge off any collision time: midpoint of the surrounding gap
            pos = bisect.bisect_left(kink_times, t)
            near = min(
                (abs(t - kink_times[p]) for p in (pos - 1, pos)
                 if 0 <= p < len(kink_times)),
                default=np.inf,
            )
            if near <= _time_tol(t, t_lo, t_hi):
                left = kink_times[pos - 1] if pos > 0 else t_lo
                right = kink_times[pos] if pos < len(kink_times) else t_hi
                t = 0.5 * (left + right)
        st = slice_trace(T, t)
        traces.append(st.mass)
        totals.append(st.total)
    return {
        "max_interior_balance": worst,
        "trace_masses": traces,
        "trace_totals": totals,
        "div_mass": T.div_mass,
    }
