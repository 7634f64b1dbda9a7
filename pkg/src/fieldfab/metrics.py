"""Design scoring: density, mobility, energy demand and PV potential.

The mobility and solar models are deliberately simple, self-contained
stand-ins for external simulation tools: walk access is a piecewise-linear
decay of network distance to the nearest amenity, and PV yield combines
usable-area fractions with a per-orientation irradiation table attenuated
by the horizon angle to the tallest obstruction in front of each facade.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from shapely.geometry import LineString, Point
from shapely.geometry.polygon import orient
from shapely.strtree import STRtree

ORIENTATIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")

#: walk-access distance (m) up to which an amenity counts fully / not at all
WALK_FULL_DIST = 400.0
WALK_ZERO_DIST = 1600.0


class MetricsError(ValueError):
    """Invalid metric input or configuration."""


@dataclass
class MetricsRecord:
    far: float = 0.0
    population_density: float = 0.0
    betweenness_mean: float = 0.0
    betweenness_max: float = 0.0
    walk_access: float = 0.0
    energy_demand: float = 0.0
    pv_yield: float = 0.0
    rep: float = 0.0
    envelope_area: float = 0.0
    unmet_floor_area: float = 0.0

    FIELDS = (
        "far",
        "population_density",
        "betweenness_mean",
        "betweenness_max",
        "walk_access",
        "energy_demand",
        "pv_yield",
        "rep",
        "envelope_area",
        "unmet_floor_area",
    )

    def __post_init__(self):
        for name in self.FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise MetricsError(f"metric {name} is not finite")
        if abs(self.rep - (self.pv_yield - self.energy_demand)) > 1e-9 * max(
            1.0, abs(self.pv_yield), abs(self.energy_demand)
        ):
            raise MetricsError("rep must equal pv_yield - energy_demand")

    def to_dict(self):
        return {name: float(getattr(self, name)) for name in self.FIELDS}


@dataclass
class SolarConfig:
    roof_irradiation: float = 1200.0
    facade_irradiation: dict = dataclass_field(
        default_factory=lambda: {
            "N": 350.0,
            "NE": 450.0,
            "E": 650.0,
            "SE": 800.0,
            "S": 900.0,
            "SW": 800.0,
            "W": 650.0,
            "NW": 450.0,
        }
    )
    roof_fraction: float = 0.8
    facade_fraction: float = 0.4
    efficiency: float = 0.2
    obstruction_radius: float = 50.0
    min_wall_length: float = 1.0

    def __post_init__(self):
        for frac in (self.roof_fraction, self.facade_fraction, self.efficiency):
            if not 0 <= frac <= 1:
                raise MetricsError("solar fractions must lie in [0, 1]")
        missing = [o for o in ORIENTATIONS if o not in self.facade_irradiation]
        if missing:
            raise MetricsError(f"facade irradiation missing orientations {missing}")


def check_eui_table(eui, programs=None):
    from .massing import PROGRAMS

    names = programs if programs is not None else PROGRAMS
    for name in names:
        if name not in eui:
            raise MetricsError(f"EUI table is missing program {name!r}")
        if eui[name] <= 0:
            raise MetricsError(f"EUI for {name!r} must be positive")


def density_metrics(masses, buildable_area):
    """(floor area ratio, population density) over the buildable area."""
    if buildable_area <= 0:
        raise MetricsError("buildable area must be > 0")
    floor = sum(m.floor_area for m in masses)
    people = sum(m.population for m in masses)
    return floor / buildable_area, people / buildable_area


def betweenness(network, weighted=True):
    """Exact shortest-path betweenness per node (Brandes).

    Edge weights are centerline lengths (hop counts when ``weighted`` is
    false); each unordered node pair counts once, ties split fractionally
    between equal shortest paths, and path endpoints are excluded.
    """
    adj = network.adjacency() if hasattr(network, "adjacency") else network
    nodes = list(adj)
    bc = {v: 0.0 for v in nodes}
    for s in nodes:
        order = []
        preds = {v: [] for v in nodes}
        sigma = {v: 0.0 for v in nodes}
        dist = {v: math.inf for v in nodes}
        sigma[s] = 1.0
        dist[s] = 0.0
        settled = set()
        tick = 0
        heap = [(0.0, tick, s)]
        while heap:
            d, _, v = heapq.heappop(heap)
            if v in settled:
                continue
            settled.add(v)
            order.append(v)
            for entry in adj[v]:
                w, length = entry[0], entry[1]
                if w in settled:
                    continue
                nd = d + (length if weighted else 1.0)
                if nd < dist[w]:
                    dist[w] = nd
                    sigma[w] = sigma[v]
                    preds[w] = [v]
                    tick += 1
                    heapq.heappush(heap, (nd, tick, w))
                elif nd == dist[w]:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {v: 0.0 for v in nodes}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return {v: b / 2.0 for v, b in bc.items()}


def _multi_source_dijkstra(adj, sources):
    dist = {v: math.inf for v in adj}
    heap = []
    tick = 0
    for s in sources:
        if s in dist:
            dist[s] = 0.0
            heap.append((0.0, tick, s))
            tick += 1
    heapq.heapify(heap)
    settled = set()
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in settled:
            continue
        settled.add(v)
        for entry in adj[v]:
            w, length = entry[0], entry[1]
            nd = d + length
            if nd < dist[w]:
                dist[w] = nd
                tick += 1
                heapq.heappush(heap, (nd, tick, w))
    return dist


def _nearest_node(nodes, p):
    d = np.hypot(nodes[:, 0] - p[0], nodes[:, 1] - p[1])
    return int(np.argmin(d))


def walk_access(
    masses,
    amenities,
    network,
    shares=None,
    full_dist=WALK_FULL_DIST,
    zero_dist=WALK_ZERO_DIST,
):
    """Population-weighted amenity access score in [0, 100].

    ``amenities`` maps program name -> list of amenity positions; each
    building contributes, per program, 1.0 up to ``full_dist`` meters of
    network distance, fading linearly to 0 at ``zero_dist``.  Program
    weights default to uniform and are renormalized over the programs
    actually provided.  Unreachable programs contribute nothing.
    """
    if not masses:
        return 0.0
    if len(network.nodes) == 0 or not amenities:
        return 0.0
    adj = network.adjacency()
    nodes = network.nodes

    programs = sorted(amenities)
    if shares:
        weight = {p: shares.get(p, 0.0) for p in programs}
    else:
        weight = {p: 1.0 for p in programs}
    wsum = sum(weight.values())
    if wsum <= 0:
        return 0.0
    weight = {p: w / wsum for p, w in weight.items()}

    dist_tables = {}
    for p in programs:
        sources = {_nearest_node(nodes, a) for a in amenities[p]}
        dist_tables[p] = _multi_source_dijkstra(adj, sources) if sources else {}

    def contribution(d):
        if d <= full_dist:
            return 1.0
        if d >= zero_dist:
            return 0.0
        return (zero_dist - d) / (zero_dist - full_dist)

    scores = []
    pops = []
    for m in masses:
        c = m.footprint.centroid
        node = _nearest_node(nodes, (c.x, c.y))
        score = 0.0
        for p in programs:
            d = dist_tables[p].get(node, math.inf)
            if math.isfinite(d):
                score += weight[p] * contribution(d)
        scores.append(100.0 * score)
        pops.append(max(0.0, m.population))

    total_pop = sum(pops)
    if total_pop > 0:
        return sum(s * w for s, w in zip(scores, pops)) / total_pop
    return sum(scores) / len(scores)


def energy_demand(masses, eui):
    """Annual demand: per-program floor areas times their EUI targets."""
    total = 0.0
    for m in masses:
        for program, area in m.program_areas.items():
            if program not in eui:
                raise MetricsError(f"EUI table is missing program {program!r}")
            total += eui[program] * area
    return total


def _orientation_bucket(normal):
    bearing = (math.degrees(math.atan2(normal[0], normal[1]))) % 360.0
    return ORIENTATIONS[int(round(bearing / 45.0)) % 8]


def _wall_visibility(midpoint, normal, height, tree, footprints, heights, self_idx, radius):
    """1 - horizon_angle/90 toward the tallest obstruction along the normal."""
    if radius <= 0:
        return 1.0
    end = (midpoint[0] + normal[0] * radius, midpoint[1] + normal[1] * radius)
    ray = LineString([midpoint, end])
    origin = Point(midpoint)
    worst = 0.0
    for idx in tree.query(ray):
        idx = int(idx)
        if idx == self_idx or heights[idx] <= 0:
            continue
        hit = ray.intersection(footprints[idx])
        if hit.is_empty:
            continue
        d = origin.distance(hit)
        theta = 90.0 if d <= 1e-12 else math.degrees(math.atan2(heights[idx], d))
        worst = max(worst, theta)
    return min(1.0, max(0.0, 1.0 - worst / 90.0))


def pv_yield(masses, solar):
    """(annual PV yield, total envelope area) for a set of masses.

    Roofs contribute usable-fraction * area * roof irradiation; each wall
    contributes usable-fraction * area * its orientation's irradiation *
    visibility, where visibility fades with the elevation angle to the
    tallest obstruction within the search radius along the wall normal.
    The result is scaled by the panel efficiency.
    """
    footprints = [m.footprint for m in masses]
    heights = [m.height for m in masses]
    tree = STRtree(footprints) if footprints else None

    collected = 0.0
    envelope = 0.0
    for i, m in enumerate(masses):
        if m.stories <= 0:
            continue
        roof_area = m.footprint_area
        envelope += roof_area
        collected += solar.roof_fraction * roof_area * solar.roof_irradiation

        poly = orient(m.footprint)
        rings = [poly.exterior] + list(poly.interiors)
        for ring in rings:
            coords = list(ring.coords)
            for a, b in zip(coords[:-1], coords[1:]):
                ex, ey = b[0] - a[0], b[1] - a[1]
                length = math.hypot(ex, ey)
                if length < solar.min_wall_length:
                    continue
                normal = (ey / length, -ex / length)
                wall_area = length * m.height
                envelope += wall_area
                mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
                vis = _wall_visibility(
                    mid, normal, m.height, tree, footprints, heights, i,
                    solar.obstruction_radius,
                )
                irr = solar.facade_irradiation[_orientation_bucket(normal)]
                collected += solar.facade_fraction * wall_area * irr * vis
    return solar.efficiency * collected, envelope


def rep(pv, demand):
    """Renewable energy potential: PV yield minus energy demand."""
    return pv - demand


def compute_metrics(
    network, parcels, masses, eui, solar, amenities=None, shares=None, unmet=0.0
):
    """Assemble the full record for one generated design."""
    buildable = sum(p.area for p in parcels if p.buildable)
    if buildable <= 0:
        buildable = sum(p.area for p in parcels) or 1.0
    far, pop_density = density_metrics(masses, buildable)

    bc = betweenness(network) if len(network.nodes) > 1 else {}
    values = list(bc.values())
    bc_mean = float(np.mean(values)) if values else 0.0
    bc_max = float(np.max(values)) if values else 0.0

    walk = walk_access(masses, amenities or {}, network, shares)
    demand = energy_demand(masses, eui)
    pv, envelope = pv_yield(masses, solar)
    return MetricsRecord(
        far=far,
        population_density=pop_density,
        betweenness_mean=bc_mean,
        betweenness_max=bc_max,
        walk_access=walk,
        energy_demand=demand,
        pv_yield=pv,
        rep=rep(pv, demand),
        envelope_area=envelope,
        unmet_floor_area=unmet,
    )
