"""Blocks from inflated streets, parcels from recursive OBB subdivision.

Street centerlines are buffered to their per-level widths and subtracted
from the design boundary; the remaining regions are blocks.  Each block is
tagged large or small, then recursively halved along its minimum oriented
bounding box's short axis until the cluster's target area range is reached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from shapely.geometry import LineString, MultiPolygon, Point, Polygon
from shapely.ops import split as shapely_split, unary_union


class ParcelizeError(ValueError):
    """Invalid parcelization input."""


class NoBlocksError(ParcelizeError):
    """Streets cover the whole boundary; nothing left to subdivide."""


@dataclass
class Block:
    id: int
    polygon: Polygon
    street_levels: tuple = ()
    cluster: str = "small"

    @property
    def area(self):
        return float(self.polygon.area)


@dataclass
class Parcel:
    polygon: Polygon
    block_id: int
    cluster: str
    buildable: bool = True
    oversized: bool = False

    @property
    def area(self):
        return float(self.polygon.area)

    def to_feature(self):
        return {
            "type": "Feature",
            "geometry": polygon_to_geojson(self.polygon),
            "properties": {
                "block_id": self.block_id,
                "cluster": self.cluster,
                "buildable": self.buildable,
                "area_m2": self.area,
            },
        }


@dataclass
class SubdivisionParams:
    """Targets per cluster plus shared aspect and width settings.

    ``targets`` maps cluster name -> (area_min, area_max).  ``cluster``
    picks the tagging method: ("threshold", area) or ("percentile", q,
    points_of_interest).
    """

    targets: dict
    max_aspect: float = 4.0
    street_widths: dict = dataclass_field(default_factory=dict)
    cluster: tuple = ("threshold", 2000.0)
    sliver_area: float = 1.0

    def __post_init__(self):
        for name, (amin, amax) in self.targets.items():
            if not 0 < amin < amax:
                raise ParcelizeError(f"cluster {name!r} needs 0 < area_min < area_max")
        for level, w in self.street_widths.items():
            if w <= 0:
                raise ParcelizeError(f"street width for level {level} must be > 0")
        kind = self.cluster[0]
        if kind == "threshold":
            if self.cluster[1] <= 0:
                raise ParcelizeError("threshold area must be > 0")
        elif kind == "percentile":
            if not 0 < self.cluster[1] <= 1:
                raise ParcelizeError("percentile q must be in (0, 1]")
        else:
            raise ParcelizeError(f"unknown cluster method {kind!r}")


def polygon_to_geojson(poly):
    from shapely.geometry.polygon import orient

    poly = orient(poly)
    rings = [list(poly.exterior.coords)] + [list(r.coords) for r in poly.interiors]
    return {
        "type": "Polygon",
        "coordinates": [[[float(x), float(y)] for x, y in ring] for ring in rings],
    }


def _explode(geom):
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    return [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon)]


def _sorted_polys(polys):
    return sorted(polys, key=lambda p: (round(p.centroid.x, 6), round(p.centroid.y, 6)))


def inflate_and_block(network, widths, boundary, sliver_area=1.0):
    """Buffer centerlines to corridors and return the leftover blocks.

    ``widths`` maps street level -> full corridor width.  Blocks smaller
    than ``sliver_area`` are discarded.
    """
    for level, w in widths.items():
        if w <= 0:
            raise ParcelizeError(f"street width for level {level} must be > 0")
    level_buffers = {}
    for e in network.edges:
        w = widths.get(e.level)
        if w is None:
            raise ParcelizeError(f"no width configured for street level {e.level}")
        buf = LineString(e.points).buffer(w / 2.0)
        level_buffers.setdefault(e.level, []).append(buf)

    merged = {lvl: unary_union(bufs) for lvl, bufs in level_buffers.items()}
    corridor = unary_union(list(merged.values())) if merged else Polygon()
    remainder = boundary.difference(corridor)
    polys = [p for p in _explode(remainder) if p.area >= sliver_area]
    if not polys:
        raise NoBlocksError("street corridors cover the entire boundary")

    blocks = []
    for bid, poly in enumerate(_sorted_polys(polys)):
        levels = tuple(
            sorted(lvl for lvl, geom in merged.items() if poly.distance(geom) <= 1e-9)
        )
        blocks.append(Block(bid, poly, levels))
    return blocks


def _obb_axes(poly):
    """Edge vectors (long, short) of the minimum rotated rectangle."""
    obb = poly.minimum_rotated_rectangle
    if not isinstance(obb, Polygon):
        return None
    corners = np.asarray(obb.exterior.coords)[:4]
    e1 = corners[1] - corners[0]
    e2 = corners[2] - corners[1]
    l1 = float(np.hypot(*e1))
    l2 = float(np.hypot(*e2))
    if l1 <= 0 or l2 <= 0:
        return None
    center = corners.mean(axis=0)
    if l1 >= l2:
        return center, e1 / l1, l1, e2 / l2, l2
    return center, e2 / l2, l2, e1 / l1, l1


def obb_aspect(poly):
    """Long/short side ratio of the minimum oriented bounding box."""
    axes = _obb_axes(poly)
    if axes is None:
        return math.inf
    _, _, long_len, _, short_len = axes
    return math.inf if short_len <= 0 else long_len / short_len


def _chord_length(poly, center, direction, reach):
    line = LineString(
        [tuple(center - direction * reach), tuple(center + direction * reach)]
    )
    hit = line.intersection(poly)
    return float(hit.length)


def obb_split(poly):
    """Halve a polygon across the short axis of its minimum bounding box.

    The split line runs through the box center parallel to its short
    edges; parts land on the side holding their centroid.  Returns (side
    a, side b) geometries, or None when a side would be degenerate.  A tie
    between box orientations picks the shorter split chord, then the lower
    line angle.
    """
    axes = _obb_axes(poly)
    if axes is None:
        return None
    center, long_dir, long_len, short_dir, short_len = axes
    reach = long_len + short_len

    if abs(long_len - short_len) <= 1e-9 * max(long_len, short_len):
        cands = sorted(
            (short_dir, long_dir),
            key=lambda d: (
                round(_chord_length(poly, center, d, reach), 9),
                math.atan2(d[1], d[0]) % math.pi,
            ),
        )
        cut_dir = cands[0]
        axis_dir = np.array([-cut_dir[1], cut_dir[0]])
    else:
        cut_dir = short_dir
        axis_dir = long_dir

    cutter = LineString(
        [tuple(center - cut_dir * reach), tuple(center + cut_dir * reach)]
    )
    try:
        pieces = _explode(shapely_split(poly, cutter))
    except Exception:
        return None
    if len(pieces) < 2:
        return None

    side_a, side_b = [], []
    for piece in pieces:
        c = np.array([piece.centroid.x, piece.centroid.y])
        if float(np.dot(c - center, axis_dir)) >= 0:
            side_a.append(piece)
        else:
            side_b.append(piece)
    if not side_a or not side_b:
        return None
    geom_a = unary_union(side_a)
    geom_b = unary_union(side_b)
    eps = max(1e-12, 1e-9 * poly.area)
    if geom_a.area < eps or geom_b.area < eps:
        return None
    return geom_a, geom_b


def subdivide(block, params):
    """Recursively split a block into parcels for its cluster's area range.

    Splitting recurses while a part exceeds area_max; a split is undone
    when either half would drop under area_min (the part is kept whole and
    flagged oversized).  Parts breaking the aspect limit, or fragments
    under area_min, stay in the output as non-buildable open space.
    """
    amin, amax = params.targets[block.cluster]
    parcels = []

    def finalize(poly, oversized):
        buildable = True
        if poly.area < amin or obb_aspect(poly) > params.max_aspect:
            buildable = False
        parcels.append(
            Parcel(poly, block.id, block.cluster, buildable=buildable, oversized=oversized)
        )

    def recurse(poly):
        if poly.area <= amax:
            finalize(poly, oversized=False)
            return
        halves = obb_split(poly)
        if halves is None:
            finalize(poly, oversized=True)
            return
        geom_a, geom_b = halves
        if geom_a.area < amin or geom_b.area < amin:
            finalize(poly, oversized=True)
            return
        for half in (geom_a, geom_b):
            for part in _sorted_polys(_explode(half)):
                recurse(part)

    recurse(block.polygon)
    return parcels


def _average_ranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    sorted_vals = np.asarray(values)[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def cluster_parcels(blocks, method):
    """Tag each block large or small; mutates blocks and returns the tags.

    threshold: large iff area >= threshold.  percentile: blocks are scored
    by area rank damped by distance to the nearest point of interest, and
    the top q fraction of scores becomes large.
    """
    kind = method[0]
    tags = {}
    if kind == "threshold":
        a_t = method[1]
        if a_t <= 0:
            raise ParcelizeError("threshold area must be > 0")
        for b in blocks:
            tags[b.id] = "large" if b.area >= a_t else "small"
    elif kind == "percentile":
        q = method[1]
        pois = [Point(p) for p in (method[2] if len(method) > 2 else [])]
        if not 0 < q <= 1:
            raise ParcelizeError("percentile q must be in (0, 1]")
        areas = [b.area for b in blocks]
        ranks = _average_ranks(areas)
        scores = []
        for b, rank in zip(blocks, ranks):
            dist = min((b.polygon.distance(p) for p in pois), default=0.0)
            scores.append(rank / (1.0 + dist))
        k = int(math.floor(q * len(blocks) + 0.5))
        order = sorted(range(len(blocks)), key=lambda i: (-scores[i], blocks[i].id))
        chosen = set(order[:k])
        for i, b in enumerate(blocks):
            tags[b.id] = "large" if i in chosen else "small"
    else:
        raise ParcelizeError(f"unknown cluster method {kind!r}")

    for b in blocks:
        b.cluster = tags[b.id]
    return tags


def parcelize_network(network, boundary, params):
    """Full stage: inflate streets, extract blocks, tag clusters, subdivide."""
    blocks = inflate_and_block(
        network, params.street_widths, boundary, sliver_area=params.sliver_area
    )
    cluster_parcels(blocks, params.cluster)
    parcels = []
    for block in blocks:
        parcels.extend(subdivide(block, params))
    return blocks, parcels


def parcels_to_geojson(parcels):
    return {
        "type": "FeatureCollection",
        "features": [p.to_feature() for p in parcels],
    }
