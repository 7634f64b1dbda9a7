"""Evenly-spaced hyperstreamline tracing and street network assembly.

Streets are traced as polylines everywhere tangent to the major or minor
eigenvector of a tensor field (forward Euler, bilinear field sampling with
sign alignment).  Tracing alternates between the two eigen families from a
FIFO seed queue; spacing and crossing stops are enforced against lines of
the SAME family only, since the two families are meant to cross each other
to form intersections.  Midpoints between seeds feed the next, finer street
level.  All traced levels are finally noded into a planar graph.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from shapely.geometry import LineString, Point, Polygon
from shapely.prepared import prep

from .fieldkit import OutOfDomainError, sample_field

MAJOR = "major"
MINOR = "minor"


class TraceError(ValueError):
    """Invalid tracing input."""


class EmptyNetworkError(TraceError):
    """No streamline survived the first level."""


class Stop(enum.Enum):
    CONTINUE = "continue"
    HIT_BOUNDARY = "hit_boundary"
    HIT_LINE = "hit_line"
    TOO_CLOSE = "too_close"
    DEGENERATE = "degenerate"
    MAX_STEPS = "max_steps"


@dataclass
class TraceParams:
    """Per-level tracing controls.

    ``step`` of None means "use the local field magnitude as step length";
    otherwise the step is min(step, local magnitude).  ``d_test`` defaults
    to half of ``d_sep`` following the evenly-spaced streamline convention.
    """

    boundary: Polygon
    seed_spacing: float
    d_sep: float = None
    d_test: float = None
    step: float = None
    max_steps: int = 2000
    width: float = 0.0

    def __post_init__(self):
        if self.d_sep is None:
            self.d_sep = self.seed_spacing
        if self.d_test is None:
            self.d_test = 0.5 * self.d_sep
        if not (0 < self.d_test <= self.d_sep):
            raise TraceError("need 0 < d_test <= d_sep")
        if self.step is not None and self.step <= 0:
            raise TraceError("step length must be > 0")
        if self.step is not None and self.seed_spacing < self.step:
            raise TraceError("seed_spacing must be >= step length")
        if self.seed_spacing <= 0:
            raise TraceError("seed_spacing must be > 0")


@dataclass
class Streamline:
    points: np.ndarray
    level: int = 0
    eigen: str = MAJOR

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return self.points.shape[0]

    @property
    def empty(self):
        return len(self) < 2

    @property
    def closed(self):
        return len(self) >= 4 and np.allclose(self.points[0], self.points[-1])

    def arc_positions(self):
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def length(self):
        return float(self.arc_positions()[-1]) if len(self) > 1 else 0.0

    def point_at(self, s):
        arcs = self.arc_positions()
        s = min(max(s, 0.0), arcs[-1])
        k = int(np.searchsorted(arcs, s, side="right")) - 1
        k = min(k, len(arcs) - 2)
        span = arcs[k + 1] - arcs[k]
        t = 0.0 if span <= 0 else (s - arcs[k]) / span
        return (1 - t) * self.points[k] + t * self.points[k + 1]


def _seg_point_dist(p, a, b):
    ab = b - a
    denom = float(ab[0] ** 2 + ab[1] ** 2)
    if denom <= 0:
        return float(np.hypot(*(p - a)))
    t = max(0.0, min(1.0, float(np.dot(p - a, ab)) / denom))
    c = a + t * ab
    return float(np.hypot(*(p - c)))


def _seg_crossing(p, q, a, b, eps=1e-12):
    """Parameter t along p->q of its crossing with segment a->b, or None."""
    r = q - p
    s = b - a
    denom = r[0] * s[1] - r[1] * s[0]
    qp = a - p
    if abs(denom) <= eps:
        return None
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
        return min(max(t, 0.0), 1.0)
    return None


def _seg_seg_dist(p, q, a, b):
    """Distance between segments; for non-crossing pairs the closest pair
    of points always involves an endpoint."""
    if _seg_crossing(p, q, a, b) is not None:
        return 0.0
    return min(
        _seg_point_dist(a, p, q),
        _seg_point_dist(b, p, q),
        _seg_point_dist(p, a, b),
        _seg_point_dist(q, a, b),
    )


class SegmentIndex:
    """Uniform-grid hash of traced segments supporting radius and crossing
    queries, keyed by eigen family."""

    def __init__(self, cell_size):
        if cell_size <= 0:
            raise TraceError("index cell size must be > 0")
        self.cell = float(cell_size)
        self.cells = {}
        self.n_lines = 0

    def _keys_for(self, lo, hi, pad=0.0):
        c = self.cell
        x0 = math.floor((lo[0] - pad) / c)
        x1 = math.floor((hi[0] + pad) / c)
        y0 = math.floor((lo[1] - pad) / c)
        y1 = math.floor((hi[1] + pad) / c)
        for cx in range(x0, x1 + 1):
            for cy in range(y0, y1 + 1):
                yield (cx, cy)

    def add_streamline(self, line: Streamline):
        line_id = self.n_lines
        self.n_lines += 1
        pts = line.points
        for k in range(len(pts) - 1):
            a, b = pts[k], pts[k + 1]
            lo = np.minimum(a, b)
            hi = np.maximum(a, b)
            entry = (a[0], a[1], b[0], b[1], line_id, line.eigen, line.level)
            for key in self._keys_for(lo, hi):
                self.cells.setdefault(key, []).append(entry)
        return line_id

    def _candidates(self, lo, hi, pad, family):
        seen = set()
        for key in self._keys_for(lo, hi, pad):
            for entry in self.cells.get(key, ()):
                if family is not None and entry[5] != family:
                    continue
                ident = id(entry)
                if ident not in seen:
                    seen.add(ident)
                    yield entry

    def min_dist(self, p, radius, family=None):
        """Distance from p to the nearest stored segment within radius
        (inf when nothing is that close)."""
        p = np.asarray(p, dtype=float)
        best = math.inf
        for e in self._candidates(p, p, radius, family):
            a = np.array([e[0], e[1]])
            b = np.array([e[2], e[3]])
            d = _seg_point_dist(p, a, b)
            if d < best:
                best = d
        return best if best <= radius else math.inf

    def min_seg_dist(self, p, q, radius, family=None):
        """Distance from segment p->q to the nearest stored segment within
        radius (inf when nothing is that close)."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        lo = np.minimum(p, q)
        hi = np.maximum(p, q)
        best = math.inf
        for e in self._candidates(lo, hi, radius, family):
            a = np.array([e[0], e[1]])
            b = np.array([e[2], e[3]])
            d = _seg_seg_dist(p, q, a, b)
            if d < best:
                best = d
        return best if best <= radius else math.inf

    def first_crossing(self, p, q, family=None):
        """Earliest crossing point of segment p->q with stored segments."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        lo = np.minimum(p, q)
        hi = np.maximum(p, q)
        best_t = None
        for e in self._candidates(lo, hi, 0.0, family):
            a = np.array([e[0], e[1]])
            b = np.array([e[2], e[3]])
            t = _seg_crossing(p, q, a, b)
            if t is not None and t > 1e-12 and (best_t is None or t < best_t):
                best_t = t
        if best_t is None:
            return None
        return p + best_t * (q - p)


def _clip_to_boundary(p, q, boundary):
    seg = LineString([tuple(p), tuple(q)])
    hit = seg.intersection(boundary.exterior)
    if hit.is_empty:
        return None
    pts = []
    if hit.geom_type == "Point":
        pts = [hit]
    elif hit.geom_type == "MultiPoint":
        pts = list(hit.geoms)
    else:  # grazing along the boundary: take segment endpoints
        for g in getattr(hit, "geoms", [hit]):
            pts.extend(Point(c) for c in g.coords)
    origin = Point(tuple(p))
    best = min(pts, key=lambda pt: origin.distance(pt))
    return np.array([best.x, best.y])


def stop_condition(p, params, existing, field, prev=None, family=None):
    """Classify a proposed trace position.

    Returns (Stop, point): for CONTINUE the point is p itself; HIT_BOUNDARY
    clips the prev->p segment exactly onto the boundary; HIT_LINE snaps it
    onto the first crossed same-family line; TOO_CLOSE and DEGENERATE carry
    no point.  The proximity test is strictly below d_test so that lines
    seeded at exactly half the parent spacing survive.
    """
    p = np.asarray(p, dtype=float)
    if not _covers(params, p):
        if prev is None:
            return Stop.HIT_BOUNDARY, None
        clip = _clip_to_boundary(prev, p, params.boundary)
        if (
            clip is not None
            and existing is not None
            and existing.min_seg_dist(prev, clip, params.d_test, family) < params.d_test
        ):
            return Stop.TOO_CLOSE, None
        return Stop.HIT_BOUNDARY, clip
    try:
        _, mag = sample_field(field, p)
    except OutOfDomainError:
        return Stop.HIT_BOUNDARY, None
    if mag <= 0:
        return Stop.DEGENERATE, None
    if existing is not None:
        if prev is not None:
            crossing = existing.first_crossing(prev, p, family)
            if crossing is not None:
                return Stop.HIT_LINE, crossing
            near = existing.min_seg_dist(prev, p, params.d_test, family)
        else:
            near = existing.min_dist(p, params.d_test, family)
        if near < params.d_test:
            return Stop.TOO_CLOSE, None
    return Stop.CONTINUE, p


def _covers(params, p):
    prepared = getattr(params, "_prepared", None)
    if prepared is None:
        prepared = prep(params.boundary)
        params._prepared = prepared
    return prepared.covers(Point(tuple(p)))


def _eigen_direction(field, p, heading, eigen):
    """Travel direction and magnitude for the chosen eigen family, aligned
    with the current heading."""
    if eigen == MAJOR:
        d, mag = sample_field(field, p, heading)
        return d, mag
    # minor: sample the stored (major) line with the matching reference,
    # then rotate a quarter turn back into travel space
    ref = np.array([heading[1], -heading[0]])
    d, mag = sample_field(field, p, ref)
    return np.array([-d[1], d[0]]), mag


def _trace_half(field, seed, heading, eigen, params, existing, own, own_arc, start_arc):
    """Grow one direction from the seed; mutates own/own_arc in place.

    Returns (points, arcs, reason, closed).
    """
    pts = []
    arcs = []
    p = np.asarray(seed, dtype=float)
    arc = start_arc
    h = np.asarray(heading, dtype=float)
    window_pad = 3.0
    for _ in range(params.max_steps):
        try:
            d, mag = _eigen_direction(field, p, h, eigen)
        except OutOfDomainError:
            break
        if mag <= 0 or (d[0] == 0 and d[1] == 0):
            return pts, arcs, Stop.DEGENERATE, False
        step_len = mag if params.step is None else min(params.step, mag)
        if step_len <= 0:
            return pts, arcs, Stop.DEGENERATE, False
        q = p + d * step_len
        margin = params.d_test

        # self proximity: closure when we come back near the start, spiral
        # stop otherwise; recent points within an arc window are exempt
        if own:
            window = window_pad * max(margin, step_len)
            arr = np.asarray(own)
            arc_arr = np.asarray(own_arc)
            far = np.abs(arc + step_len - arc_arr) > window
            if np.any(far):
                cand = arr[far]
                dist = np.hypot(cand[:, 0] - q[0], cand[:, 1] - q[1])
                k = int(np.argmin(dist))
                if dist[k] < margin:
                    near_arc = arc_arr[far][k]
                    if abs(near_arc) <= 2 * params.d_test:
                        return pts, arcs, Stop.CONTINUE, True
                    return pts, arcs, Stop.TOO_CLOSE, False

        reason, point = stop_condition(q, params, existing, field, prev=p, family=eigen)
        if reason == Stop.CONTINUE:
            pts.append(q.copy())
            arc += step_len
            arcs.append(arc)
            own.append((q[0], q[1]))
            own_arc.append(arc)
            h = d
            p = q
            continue
        if reason in (Stop.HIT_BOUNDARY, Stop.HIT_LINE) and point is not None:
            gap = math.hypot(point[0] - p[0], point[1] - p[1])
            if gap > 1e-9:
                pts.append(np.asarray(point, dtype=float))
                arcs.append(arc + gap)
        return pts, arcs, reason, False
    return pts, arcs, Stop.MAX_STEPS, False


def trace_streamline(field, seed, eigen, params, existing=None, level=0):
    """Trace one streamline through the chosen eigen family.

    Grows in both directions from the seed via Euler steps of the
    sign-aligned bilinear field sample, each step min(step, local
    magnitude) long.  Returns an empty streamline on immediate degeneracy
    or when the seed is too close to a same-family line; raises on a seed
    outside the design boundary.
    """
    seed = np.asarray(seed, dtype=float)
    if not _covers(params, seed):
        raise TraceError(f"seed {tuple(seed)} lies outside the design boundary")
    if existing is not None and existing.min_dist(seed, params.d_test, eigen) < params.d_test:
        return Streamline(np.empty((0, 2)), level, eigen)
    try:
        d0, mag0 = _eigen_direction(field, seed, np.array([1.0, 0.0]), eigen)
    except OutOfDomainError:
        return Streamline(np.empty((0, 2)), level, eigen)
    if mag0 <= 0 or (d0[0] == 0 and d0[1] == 0):
        return Streamline(np.empty((0, 2)), level, eigen)

    own = [(seed[0], seed[1])]
    own_arc = [0.0]
    fwd, fwd_arcs, fwd_reason, closed = _trace_half(
        field, seed, d0, eigen, params, existing, own, own_arc, 0.0
    )
    if closed:
        points = np.vstack([[seed], fwd, [seed]])
        return Streamline(points, level, eigen)
    back, _, _, back_closed = _trace_half(
        field, seed, -d0, eigen, params, existing, own,
        [-a for a in own_arc], 0.0
    )
    chain = list(reversed(back)) + [seed] + list(fwd)
    if back_closed:
        chain = chain + [chain[0]]
    points = np.asarray(chain, dtype=float).reshape(-1, 2)
    if points.shape[0] < 2:
        return Streamline(np.empty((0, 2)), level, eigen)
    return Streamline(points, level, eigen)


def emit_seeds(line: Streamline, seed_spacing):
    """Seed points along a streamline.

    Primary seeds sit at arc-length multiples of the spacing (plus the far
    endpoint of an open line) and feed the opposite eigen family at the
    same level; midpoint seeds sit halfway between them and are reserved
    for the next level down.
    """
    if line.empty:
        raise TraceError("cannot emit seeds from an empty streamline")
    total = line.length
    eps = 1e-9 * max(total, 1.0)
    closed = line.closed

    primary_s = list(np.arange(0.0, total + eps, seed_spacing))
    if closed:
        primary_s = [s for s in primary_s if s < total - eps]
    elif total - primary_s[-1] > eps:
        primary_s.append(total)

    mid_s = list(np.arange(0.5 * seed_spacing, total - eps, seed_spacing))

    primary = [line.point_at(s) for s in primary_s]
    midpoints = [line.point_at(s) for s in mid_s]
    return primary, midpoints


def _opposite(eigen):
    return MINOR if eigen == MAJOR else MAJOR


def generate_level(field, seeds, eigen_start, params, existing, level=0):
    """Breadth-first tracing of one street level.

    ``seeds`` is an iterable of points or (point, eigen) pairs processed
    FIFO; every accepted streamline enqueues its primary seeds for the
    opposite family.  Returns (streamlines, next_level_seeds) where the
    next-level seeds are (point, eigen) pairs at inter-seed midpoints.
    """
    queue = deque()
    for s in seeds:
        if isinstance(s, tuple) and len(s) == 2 and isinstance(s[1], str):
            queue.append((np.asarray(s[0], dtype=float), s[1]))
        else:
            queue.append((np.asarray(s, dtype=float), eigen_start))

    lines = []
    next_seeds = []
    while queue:
        seed, eigen = queue.popleft()
        if not _covers(params, seed):
            continue
        line = trace_streamline(field, seed, eigen, params, existing, level)
        if line.empty:
            continue
        existing.add_streamline(line)
        lines.append(line)
        primary, midpoints = emit_seeds(line, params.seed_spacing)
        for p in primary:
            queue.append((p, _opposite(eigen)))
        next_seeds.extend((p, _opposite(eigen)) for p in midpoints)
    return lines, next_seeds


@dataclass
class Edge:
    a: int
    b: int
    points: np.ndarray
    level: int
    width: float

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


class StreetNetwork:
    """Noded planar street graph: intersection nodes and centerline edges."""

    def __init__(self, nodes, edges, boundary=None):
        self.nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
        self.edges = list(edges)
        self.boundary = boundary

    def __repr__(self):
        return f"StreetNetwork(nodes={len(self.nodes)}, edges={len(self.edges)})"

    def adjacency(self):
        adj = {i: [] for i in range(len(self.nodes))}
        for idx, e in enumerate(self.edges):
            adj[e.a].append((e.b, e.length, idx))
            adj[e.b].append((e.a, e.length, idx))
        return adj

    def degrees(self):
        deg = np.zeros(len(self.nodes), dtype=int)
        for e in self.edges:
            deg[e.a] += 1
            deg[e.b] += 1
        return deg

    def total_length(self):
        return sum(e.length for e in self.edges)

    def segments(self):
        for idx, e in enumerate(self.edges):
            pts = e.points
            for k in range(len(pts) - 1):
                yield idx, pts[k], pts[k + 1]

    def to_geojson(self):
        feats = []
        for e in self.edges:
            feats.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[float(x), float(y)] for x, y in e.points],
                    },
                    "properties": {"level": e.level, "width": e.width},
                }
            )
        return {"type": "FeatureCollection", "features": feats}


class _NodePool:
    """Merge nearly-coincident points into shared node ids (grid hash)."""

    def __init__(self, tol):
        self.tol = tol
        self.points = []
        self.grid = {}

    def key(self, x, y):
        return (math.floor(x / self.tol), math.floor(y / self.tol))

    def add(self, x, y):
        kx, ky = self.key(x, y)
        for cx in (kx - 1, kx, kx + 1):
            for cy in (ky - 1, ky, ky + 1):
                for idx in self.grid.get((cx, cy), ()):
                    px, py = self.points[idx]
                    if math.hypot(px - x, py - y) <= self.tol:
                        return idx
        idx = len(self.points)
        self.points.append((x, y))
        self.grid.setdefault((kx, ky), []).append(idx)
        return idx


def node_streamlines(streamlines, boundary, widths=None, eps_snap=None):
    """Split streamlines at mutual crossings and snap shared endpoints.

    eps_snap defaults to 1e-6 of the boundary bounding-box diagonal;
    dangling edges shorter than twice that are pruned.
    """
    lines = [ln for ln in streamlines if not ln.empty]
    if not lines:
        return StreetNetwork(np.empty((0, 2)), [], boundary)
    if eps_snap is None:
        minx, miny, maxx, maxy = boundary.bounds
        eps_snap = 1e-6 * math.hypot(maxx - minx, maxy - miny)

    shapely_lines = [LineString(ln.points) for ln in lines]
    cut_params = [set() for _ in lines]
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            if not shapely_lines[i].intersects(shapely_lines[j]):
                continue
            hit = shapely_lines[i].intersection(shapely_lines[j])
            coords = []
            for g in getattr(hit, "geoms", [hit]):
                if g.geom_type == "Point":
                    coords.append((g.x, g.y))
                else:
                    coords.extend(g.coords)
            for x, y in coords:
                pt = Point(x, y)
                cut_params[i].add(shapely_lines[i].project(pt))
                cut_params[j].add(shapely_lines[j].project(pt))

    pool = _NodePool(eps_snap)
    raw_edges = []
    for idx, ln in enumerate(lines):
        total = shapely_lines[idx].length
        cuts = sorted(cut_params[idx] | {0.0, total})
        merged = [cuts[0]]
        for c in cuts[1:]:
            if c - merged[-1] > eps_snap:
                merged.append(c)
        arcs = ln.arc_positions()
        for s0, s1 in zip(merged[:-1], merged[1:]):
            k0 = int(np.searchsorted(arcs, s0, side="right"))
            k1 = int(np.searchsorted(arcs, s1, side="left"))
            inner = ln.points[k0:k1]
            p0 = ln.point_at(s0)
            p1 = ln.point_at(s1)
            pts = np.vstack([[p0], inner, [p1]])
            a = pool.add(p0[0], p0[1])
            b = pool.add(p1[0], p1[1])
            if a == b and s1 - s0 <= eps_snap:
                continue
            pts[0] = pool.points[a]
            pts[-1] = pool.points[b]
            width = widths.get(ln.level, 0.0) if widths else 0.0
            raw_edges.append(Edge(a, b, pts, ln.level, width))

    # prune tiny dangling stubs
    while True:
        degree = {}
        for e in raw_edges:
            degree[e.a] = degree.get(e.a, 0) + 1
            degree[e.b] = degree.get(e.b, 0) + 1
        keep = []
        pruned = False
        for e in raw_edges:
            dangling = degree.get(e.a, 0) == 1 or degree.get(e.b, 0) == 1
            if dangling and e.length < 2 * eps_snap:
                pruned = True
                continue
            keep.append(e)
        raw_edges = keep
        if not pruned:
            break

    used = sorted({e.a for e in raw_edges} | {e.b for e in raw_edges})
    remap = {old: new for new, old in enumerate(used)}
    nodes = np.array([pool.points[i] for i in used], dtype=float).reshape(-1, 2)
    edges = [
        Edge(remap[e.a], remap[e.b], e.points, e.level, e.width) for e in raw_edges
    ]
    return StreetNetwork(nodes, edges, boundary)


def generate_network(field, initial_seed, levels, access_points=(), widths=None):
    """Trace every street level and assemble the noded network.

    Level k is seeded from level k-1 midpoint seeds; level 0 from the
    initial seed (boundary centroid when None) plus any mandatory boundary
    access points.  Per-level seed spacings must be strictly decreasing.
    """
    if not levels:
        raise TraceError("at least one level of trace params is required")
    spacings = [lv.seed_spacing for lv in levels]
    if any(b >= a for a, b in zip(spacings, spacings[1:])):
        raise TraceError("per-level seed_spacing must be strictly decreasing")

    boundary = levels[0].boundary
    if initial_seed is None:
        c = boundary.centroid
        initial_seed = np.array([c.x, c.y])
    index = SegmentIndex(cell_size=levels[0].d_sep)

    seeds = [(np.asarray(initial_seed, dtype=float), MAJOR)]
    seeds.extend((np.asarray(p, dtype=float), MAJOR) for p in access_points)

    all_lines = []
    for level, params in enumerate(levels):
        lines, next_seeds = generate_level(field, seeds, MAJOR, params, index, level)
        all_lines.extend(lines)
        if level == 0 and not lines:
            raise EmptyNetworkError("no streamline survived level 0")
        seeds = next_seeds

    return node_streamlines(all_lines, boundary, widths=widths)
