"""Tensor and scalar fields on a regular grid.

A tensor field stores one line orientation (angle modulo pi) and one
magnitude per grid node.  Line fields rather than signed vectors are used
throughout so that antiparallel contributions reinforce instead of
cancelling; every consumer that needs an actual vector direction supplies a
heading to disambiguate the sign.

Constraint elements (points, polylines, polygons) imprint radial patterns
rotated by a per-element angle, limited to an influence radius, and are
blended into one field by a weighted, distance-decayed, sign-aligned sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

TWO_PI = 2.0 * math.pi

SCALAR_ROLES = ("magnitude", "population-ratio", "street-density", "program-ratio")

#: distances below this count as "node sits on the element geometry"
DEGENERATE_DIST = 1e-12


class FieldError(ValueError):
    """Invalid field construction input."""


class OutOfDomainError(FieldError):
    """A sample position fell outside the grid bounds."""


class RasterParseError(FieldError):
    """Malformed raster input; carries the byte offset of the defect."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class GridSpec:
    """Regular node grid: node (i, j) sits at origin + (i*dx, j*dy)."""

    origin: tuple[float, float]
    width: float
    height: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise FieldError("grid needs nx >= 2 and ny >= 2")
        if not (math.isfinite(self.width) and math.isfinite(self.height)):
            raise FieldError("grid extent must be finite")
        if self.width <= 0 or self.height <= 0:
            raise FieldError("grid extent must be positive")

    @property
    def dx(self):
        return self.width / (self.nx - 1)

    @property
    def dy(self):
        return self.height / (self.ny - 1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    def node_positions(self):
        """All node coordinates as an (ny*nx, 2) array, row-major in j then i."""
        xs = self.origin[0] + np.arange(self.nx) * self.dx
        ys = self.origin[1] + np.arange(self.ny) * self.dy
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def contains(self, p):
        x0, y0 = self.origin
        return x0 <= p[0] <= x0 + self.width and y0 <= p[1] <= y0 + self.height


@dataclass
class ScalarField:
    """Non-negative scalar per grid node (magnitudes, density ratios, ...)."""

    grid: GridSpec
    values: np.ndarray
    role: str = "magnitude"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise FieldError("scalar field values must be finite")
        if np.any(self.values < 0):
            raise FieldError("scalar field values must be non-negative")
        if self.role not in SCALAR_ROLES:
            raise FieldError(f"unknown scalar field role {self.role!r}")
        if self.role == "population-ratio":
            self.normalize()

    def normalize(self):
        total = float(self.values.sum())
        if total <= 0:
            raise FieldError("cannot normalize an all-zero ratio field")
        self.values = self.values / total

    def sample_nearest(self, points):
        """Value of the nearest node for each query point (N, 2) -> (N,)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        g = self.grid
        i = np.clip(np.rint((pts[:, 0] - g.origin[0]) / g.dx), 0, g.nx - 1).astype(int)
        j = np.clip(np.rint((pts[:, 1] - g.origin[1]) / g.dy), 0, g.ny - 1).astype(int)
        return self.values[j, i]


@dataclass
class TensorField:
    """Line orientation (angle mod pi) plus magnitude per node."""

    grid: GridSpec
    angle: np.ndarray
    magnitude: np.ndarray

    def __post_init__(self):
        self.angle = np.mod(np.asarray(self.angle, dtype=float), math.pi).reshape(self.grid.shape)
        self.magnitude = np.asarray(self.magnitude, dtype=float).reshape(self.grid.shape)
        if not (np.all(np.isfinite(self.angle)) and np.all(np.isfinite(self.magnitude))):
            raise FieldError("tensor field entries must be finite")
        if np.any(self.magnitude < 0):
            raise FieldError("tensor magnitudes must be non-negative")

    def degenerate_mask(self):
        return self.magnitude <= 0


def _as_segments(kind, coords):
    """Geometry -> (S, 2, 2) segment array used for closest-point queries."""
    coords = np.asarray(coords, dtype=float)
    if kind == "point":
        c = coords.reshape(2)
        return np.array([[c, c]])
    pts = coords.reshape(-1, 2)
    if kind == "polygon":
        if not np.allclose(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[0]])
        if pts.shape[0] < 4:
            raise FieldError("polygon needs at least 3 distinct vertices")
    elif pts.shape[0] < 2:
        raise FieldError("polyline needs at least 2 vertices")
    segs = np.stack([pts[:-1], pts[1:]], axis=1)
    if kind == "polyline":
        lengths = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
        if lengths.sum() <= 0:
            raise FieldError("polyline has zero length")
    return segs


@dataclass
class ConstraintElement:
    """A geometric design constraint with rotation, weight, decay and reach.

    ``kind`` is one of ``point | polyline | polygon``; polygons influence via
    their boundary.  ``magnitude`` is a constant step length or a ScalarField
    sampled at each node.  ``radius`` limits where the element acts at full
    strength; beyond it a ``decay > 0`` lets the influence fade smoothly
    while ``decay == 0`` keeps the cutoff hard.
    """

    kind: str
    coords: np.ndarray
    theta: float = 0.0
    weight: float = 1.0
    decay: float = 0.0
    radius: float = math.inf
    magnitude: float | ScalarField = 1.0
    _segments: np.ndarray = dataclass_field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.kind not in ("point", "polyline", "polygon"):
            raise FieldError(f"unknown element kind {self.kind!r}")
        for name in ("theta", "weight", "decay"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise FieldError(f"element {name} must be finite")
        if self.weight < 0 or self.decay < 0 or self.radius < 0:
            raise FieldError("element weight, decay and radius must be >= 0")
        self.theta = self.theta % TWO_PI
        if isinstance(self.magnitude, (int, float)):
            if not math.isfinite(self.magnitude) or self.magnitude <= 0:
                raise FieldError("element magnitude must be finite and > 0")
        self._segments = _as_segments(self.kind, self.coords)

    @classmethod
    def from_geojson(cls, geometry, **kwargs):
        """Build from a GeoJSON Point/LineString/Polygon geometry dict."""
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "Point":
            return cls("point", np.asarray(coords, float), **kwargs)
        if gtype == "LineString":
            return cls("polyline", np.asarray(coords, float), **kwargs)
        if gtype == "Polygon":
            return cls("polygon", np.asarray(coords[0], float), **kwargs)
        raise FieldError(f"unsupported GeoJSON geometry type {gtype!r}")

    def closest_points(self, points):
        """Closest geometry point and distance for each query point.

        Returns (closest (N, 2), distance (N,)); chunked so the node-count x
        segment-count scratch arrays stay small.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        segs = self._segments
        a, b = segs[:, 0], segs[:, 1]
        ab = b - a
        ab_len2 = np.einsum("ij,ij->i", ab, ab)
        ab_len2 = np.where(ab_len2 <= 0, 1.0, ab_len2)
        closest = np.empty_like(pts)
        dist = np.empty(pts.shape[0])
        chunk = max(1, 2_000_000 // max(1, segs.shape[0]))
        for lo in range(0, pts.shape[0], chunk):
            p = pts[lo : lo + chunk]
            ap = p[:, None, :] - a[None, :, :]
            t = np.clip(np.einsum("nsj,sj->ns", ap, ab) / ab_len2, 0.0, 1.0)
            cand = a[None, :, :] + t[:, :, None] * ab[None, :, :]
            d2 = np.sum((p[:, None, :] - cand) ** 2, axis=2)
            best = np.argmin(d2, axis=1)
            rows = np.arange(p.shape[0])
            closest[lo : lo + chunk] = cand[rows, best]
            dist[lo : lo + chunk] = np.sqrt(d2[rows, best])
        return closest, dist

    def magnitudes_at(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if isinstance(self.magnitude, ScalarField):
            return self.magnitude.sample_nearest(pts)
        return np.full(pts.shape[0], float(self.magnitude))


def make_default_field(grid, theta, magnitude):
    """Uniform field: every node at angle ``theta`` (mod pi) with one magnitude."""
    if not (math.isfinite(theta) and math.isfinite(magnitude)):
        raise FieldError("default field theta and magnitude must be finite")
    if magnitude <= 0:
        raise FieldError("default field magnitude must be > 0")
    ang = np.full(grid.shape, theta % math.pi)
    mag = np.full(grid.shape, float(magnitude))
    return TensorField(grid, ang, mag)


def _element_arrays(grid, elem, soften=False):
    """Per-node (angle, magnitude) imprint of one element.

    The direction at node p is the offset from its closest geometry point,
    rotated by the element theta.  Nodes beyond the influence radius are
    inert (magnitude 0); with ``soften`` and a positive decay they instead
    keep the radial direction at an exponentially attenuated magnitude.
    Nodes on the geometry itself are degenerate.
    """
    nodes = grid.node_positions()
    closest, dist = elem.closest_points(nodes)
    offset = nodes - closest
    degenerate = dist <= DEGENERATE_DIST

    ct, st = math.cos(elem.theta), math.sin(elem.theta)
    dirx = ct * offset[:, 0] - st * offset[:, 1]
    diry = st * offset[:, 0] + ct * offset[:, 1]
    angle = np.mod(np.arctan2(diry, dirx), math.pi)

    mag = elem.magnitudes_at(nodes).astype(float)
    outside = dist > elem.radius
    if soften and elem.decay > 0:
        beyond = np.maximum(0.0, dist - elem.radius)
        mag = mag * np.exp(-elem.decay * beyond)
    else:
        mag = np.where(outside, 0.0, mag)
    mag = np.where(degenerate, 0.0, mag)
    angle = np.where(degenerate, 0.0, angle)
    return angle.reshape(grid.shape), mag.reshape(grid.shape)


def make_element_field(grid, elem):
    """Field imprinted by a single element: radial pattern rotated by theta,
    hard-limited to the influence radius."""
    angle, mag = _element_arrays(grid, elem, soften=False)
    return TensorField(grid, angle, mag)


def decay_factor(p, elem):
    """Smoothing weight in (0, 1]: 1 inside the influence range, exponential
    falloff with distance past its boundary."""
    return float(decay_factors(np.asarray(p, float).reshape(1, 2), elem)[0])


def decay_factors(points, elem):
    _, dist = elem.closest_points(points)
    beyond = np.maximum(0.0, dist - elem.radius)
    return np.exp(-elem.decay * beyond)


def combine_fields(elements, default=None, grid=None, eps_mag=None, default_weight=0.0):
    """Weighted sign-aligned sum of element fields over one grid.

    Each element contributes weight * decay * magnitude along its imprinted
    line direction; a contribution is flipped when it opposes the running
    sum so antiparallel lines reinforce.  With a positive ``default_weight``
    the default field joins the sum as one more weighted contribution;
    either way it fills in wherever the summed magnitude falls below the
    floor (nodes stay degenerate when there is no default at all).
    """
    if default is None and grid is None:
        raise FieldError("combine_fields needs a default field or an explicit grid")
    if default is not None and grid is not None and default.grid != grid:
        raise FieldError("default field grid does not match the requested grid")
    grid = grid if grid is not None else default.grid
    elements = list(elements)
    if not elements and default is None:
        raise FieldError("nothing to combine: no elements and no default field")

    if len(elements) == 1 and (default is None or default_weight <= 0):
        # one-term sum: keep the element's angles and magnitudes exact
        elem = elements[0]
        angle, mag = _element_arrays(grid, elem, soften=True)
        magnitude = elem.weight * mag
        if default is not None:
            positive = magnitude[magnitude > 0]
            floor = eps_mag if eps_mag is not None else (
                1e-9 * float(positive.mean()) if positive.size else 0.0
            )
            weak = magnitude <= floor
            angle = np.where(weak, default.angle, angle)
            magnitude = np.where(weak, default.magnitude, magnitude)
        return TensorField(grid, angle, magnitude)

    sum_x = np.zeros(grid.shape)
    sum_y = np.zeros(grid.shape)
    contributing = []
    if default is not None and default_weight > 0:
        strength = default_weight * default.magnitude
        sum_x += np.cos(default.angle) * strength
        sum_y += np.sin(default.angle) * strength
        contributing.append(strength)
    for elem in elements:
        angle, mag = _element_arrays(grid, elem, soften=True)
        strength = elem.weight * mag
        vx = np.cos(angle) * strength
        vy = np.sin(angle) * strength
        flip = (sum_x * vx + sum_y * vy) < 0
        sign = np.where(flip, -1.0, 1.0)
        sum_x += sign * vx
        sum_y += sign * vy
        contributing.append(strength)

    norm = np.hypot(sum_x, sum_y)
    if eps_mag is None:
        strengths = np.concatenate([c.ravel() for c in contributing]) if contributing else np.array([])
        positive = strengths[strengths > 0]
        eps_mag = 1e-9 * float(positive.mean()) if positive.size else 0.0

    angle = np.mod(np.arctan2(sum_y, sum_x), math.pi)
    magnitude = norm.copy()
    weak = norm <= eps_mag
    if default is not None:
        angle = np.where(weak, default.angle, angle)
        magnitude = np.where(weak, default.magnitude, magnitude)
    else:
        angle = np.where(weak, 0.0, angle)
        magnitude = np.where(weak, 0.0, magnitude)
    return TensorField(grid, angle, magnitude)


def sample_field(field, p, heading=None):
    """Bilinear sample of the line field at an arbitrary in-grid position.

    The four surrounding node line vectors are sign-aligned with ``heading``
    (or with the first node's line when no heading is given) before
    interpolation; degenerate nodes are left out of the direction average.
    Returns (unit direction, magnitude); a fully degenerate neighborhood
    yields a zero direction and zero magnitude.
    """
    g = field.grid
    x, y = float(p[0]), float(p[1])
    x0, y0 = g.origin
    if not (x0 <= x <= x0 + g.width and y0 <= y <= y0 + g.height):
        raise OutOfDomainError(f"sample position {(x, y)} outside grid bounds")

    fx = (x - x0) / g.dx
    fy = (y - y0) / g.dy
    i0 = min(int(fx), g.nx - 2)
    j0 = min(int(fy), g.ny - 2)
    tx = fx - i0
    ty = fy - j0

    weights = np.array(
        [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty]
    )
    jj = (j0, j0, j0 + 1, j0 + 1)
    ii = (i0, i0 + 1, i0, i0 + 1)
    angles = np.array([field.angle[j, i] for j, i in zip(jj, ii)])
    mags = np.array([field.magnitude[j, i] for j, i in zip(jj, ii)])

    vx = np.cos(angles)
    vy = np.sin(angles)
    if heading is None:
        ref = np.array([vx[0], vy[0]])
    else:
        ref = np.asarray(heading, dtype=float)
    sign = np.where(vx * ref[0] + vy * ref[1] < 0, -1.0, 1.0)

    alive = mags > 0
    dir_w = weights * alive
    dx = float(np.sum(dir_w * sign * vx))
    dy = float(np.sum(dir_w * sign * vy))
    norm = math.hypot(dx, dy)
    magnitude = float(np.sum(weights * mags))
    if norm <= 0 or not np.any(alive):
        return np.zeros(2), 0.0
    return np.array([dx / norm, dy / norm]), magnitude


def _pgm_tokens(data):
    """Yield (token, byte offset) from a PGM header/P2 body, skipping comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            start = i
            while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
                i += 1
            yield data[start:i], start


def _parse_pgm(data):
    tokens = _pgm_tokens(data)

    def next_token(what):
        try:
            return next(tokens)
        except StopIteration:
            raise RasterParseError(f"unexpected end of raster while reading {what}", len(data)) from None

    def next_int(what, minimum=1):
        tok, off = next_token(what)
        try:
            v = int(tok)
        except ValueError:
            raise RasterParseError(f"expected integer {what}, got {tok!r}", off) from None
        if v < minimum:
            raise RasterParseError(f"{what} must be >= {minimum}, got {v}", off)
        return v, off

    magic, off = next_token("magic number")
    if magic not in (b"P2", b"P5"):
        raise RasterParseError(f"unsupported raster magic {magic!r}", off)
    width, _ = next_int("width")
    height, _ = next_int("height")
    maxval, maxval_off = next_int("maxval")
    if maxval > 65535:
        raise RasterParseError(f"maxval {maxval} exceeds 65535", maxval_off)

    count = width * height
    if magic == b"P2":
        values = np.empty(count)
        for k in range(count):
            v, off = next_int(f"pixel {k}", minimum=0)
            if v > maxval:
                raise RasterParseError(f"pixel value {v} exceeds maxval {maxval}", off)
            values[k] = v
    else:
        # single whitespace byte separates the header from binary samples
        _, last_off = maxval, maxval_off
        body_start = data.index(str(maxval).encode(), maxval_off) + len(str(maxval)) + 1
        bytes_per = 1 if maxval < 256 else 2
        need = count * bytes_per
        body = data[body_start : body_start + need]
        if len(body) < need:
            raise RasterParseError(
                f"raster body truncated: need {need} bytes, have {len(body)}",
                body_start + len(body),
            )
        dtype = np.uint8 if bytes_per == 1 else ">u2"
        values = np.frombuffer(body, dtype=dtype, count=count).astype(float)
    return values.reshape(height, width)


def _parse_text_grid(data):
    text = data.decode("utf-8", errors="strict")
    rows = []
    offset = 0
    width = None
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            try:
                row = [float(tok) for tok in stripped.split()]
            except ValueError:
                raise RasterParseError("non-numeric token in text grid", offset) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise RasterParseError(
                    f"ragged text grid: expected {width} columns, got {len(row)}", offset
                )
            rows.append(row)
        offset += len(line.encode("utf-8"))
    if not rows:
        raise RasterParseError("empty text grid", 0)
    return np.asarray(rows, dtype=float)


def load_scalar_map(raster, grid, role="magnitude"):
    """Parse a PGM (P2/P5) or plain text grid and resample it onto ``grid``.

    Resampling is nearest-neighbor; raster row 0 maps to grid row j = 0.
    Population-ratio fields are normalized to sum to one.
    """
    if isinstance(raster, str):
        raster = raster.encode("utf-8")
    data = bytes(raster)
    head = data.lstrip()[:2]
    if head in (b"P2", b"P5"):
        pixels = _parse_pgm(data)
    else:
        pixels = _parse_text_grid(data)

    rows, cols = pixels.shape
    i = np.arange(grid.nx)
    j = np.arange(grid.ny)
    src_c = np.rint(i * (cols - 1) / max(1, grid.nx - 1)).astype(int) if grid.nx > 1 else np.zeros(1, int)
    src_r = np.rint(j * (rows - 1) / max(1, grid.ny - 1)).astype(int) if grid.ny > 1 else np.zeros(1, int)
    values = pixels[np.ix_(src_r, src_c)]
    return ScalarField(grid, values, role)


def field_magnitude_to_pgm(field, maxval=65535):
    """Debug export: magnitudes scaled onto a P2 raster."""
    mags = field.magnitude
    top = float(mags.max())
    scale = maxval / top if top > 0 else 0.0
    pixels = np.rint(mags * scale).astype(int)
    lines = [f"P2", f"{field.grid.nx} {field.grid.ny}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in pixels)
    return ("\n".join(lines) + "\n").encode("ascii")


def field_angles_to_csv(field):
    """Debug export: one CSV row per grid row of angles in radians."""
    lines = [",".join(f"{v:.9g}" for v in row) for row in field.angle]
    return "\n".join(lines) + "\n"
