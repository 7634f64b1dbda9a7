"""End-to-end generation: field -> streets -> parcels -> masses -> metrics.

``generate`` runs every stage for one scenario + parameter vector and
returns a DesignBundle; with an output directory it also writes the
artifact set (network/parcels/masses GeoJSON, masses OBJ, metrics JSON and
an SVG plan) as each stage completes, so a failed run keeps everything up
to its last good stage.  All artifacts are timestamp-free and
byte-deterministic for identical inputs.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from shapely.ops import triangulate

from . import massing as massing_mod
from . import metrics as metrics_mod
from . import parcelize as parcelize_mod
from . import streamtrace
from .scenario import Scenario, ScenarioError, load_scenario, scenario_hash

__all__ = [
    "DesignBundle",
    "StageError",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "scenario_hash",
    "generate",
    "render_plan",
    "masses_to_obj",
]

STAGES = ("field", "network", "parcels", "masses", "metrics")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(str(cause))
        self.stage = stage
        self.cause = cause


@dataclass
class DesignBundle:
    scenario_hash: str
    params: dict
    field: object = None
    network: object = None
    blocks: list = dataclass_field(default_factory=list)
    parcels: list = dataclass_field(default_factory=list)
    masses: list = dataclass_field(default_factory=list)
    metrics: object = None
    unmet_floor_area: float = 0.0
    artifact_paths: dict = dataclass_field(default_factory=dict)


def _write(out_dir, name, data, paths):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    with open(path, mode) as fh:
        fh.write(data)
    paths[name.split(".")[0] if not name.startswith("plan") else "img"] = path


def _json_bytes(obj):
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode("utf-8")


def field_payload(field):
    return {
        "grid": {
            "origin": [field.grid.origin[0], field.grid.origin[1]],
            "width": field.grid.width,
            "height": field.grid.height,
            "nx": field.grid.nx,
            "ny": field.grid.ny,
        },
        "angle": [[round(float(v), 6) for v in row] for row in field.angle],
        "magnitude": [[round(float(v), 6) for v in row] for row in field.magnitude],
    }


def _pdm_masses(scenario, parcels):
    buildable = [p for p in parcels if p.buildable]
    pdm = scenario.maps["pdm"]
    ratios = massing_mod.parcel_ratios(pdm, buildable)

    bpm_specs = [p for p in scenario.programs if p.bpm is not None]
    accruals = {
        spec.name: massing_mod.parcel_ratios(spec.bpm, buildable) for spec in bpm_specs
    }

    masses = []
    for k, parcel in enumerate(buildable):
        if accruals:
            mix = {name: float(table[k]) for name, table in accruals.items()}
            if sum(mix.values()) <= 0:
                mix = {p.name: p.share for p in scenario.programs}
        else:
            mix = {p.name: p.share for p in scenario.programs}
        masses.append(
            massing_mod.height_from_pdm(parcel, float(ratios[k]), scenario.massing, mix)
        )
    return masses


def _bpm_masses(scenario, parcels):
    buildable = [p for p in parcels if p.buildable]
    conf = scenario.raw["massing"].get("program_targets")
    if conf:
        targets = {name: float(v) for name, v in conf.items()}
    else:
        pop = scenario.massing.population
        targets = {p.name: pop * p.share * p.per_person_area for p in scenario.programs}
    return massing_mod.allocate_programs(
        buildable, scenario.programs, targets, scenario.massing
    )


def generate(scenario, params=None, out_dir=None):
    """Run all pipeline stages; see module docstring."""
    if params:
        scenario = scenario.with_overrides(params)
    bundle = DesignBundle(scenario_hash=scenario.hash, params=dict(params or {}))
    paths = bundle.artifact_paths

    try:
        bundle.field = scenario.build_field()
    except Exception as exc:
        raise StageError("field", exc) from exc

    try:
        bundle.network = streamtrace.generate_network(
            bundle.field,
            scenario.initial_seed,
            scenario.trace_levels(),
            access_points=scenario.access_points,
            widths=scenario.street_widths(),
        )
        _write(out_dir, "network.geojson", _json_bytes(bundle.network.to_geojson()), paths)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("network", exc) from exc

    try:
        bundle.blocks, bundle.parcels = parcelize_mod.parcelize_network(
            bundle.network, scenario.boundary, scenario.subdivision
        )
        _write(
            out_dir,
            "parcels.geojson",
            _json_bytes(parcelize_mod.parcels_to_geojson(bundle.parcels)),
            paths,
        )
    except Exception as exc:
        raise StageError("parcels", exc) from exc

    try:
        mode = scenario.raw["massing"].get("mode", "pdm")
        masses = _pdm_masses(scenario, bundle.parcels) if mode == "pdm" else _bpm_masses(
            scenario, bundle.parcels
        )
        masses, unmet = massing_mod.apply_constraints(
            masses, scenario.massing.max_aspect, scenario.massing.min_footprint_area
        )
        bundle.masses = masses
        bundle.unmet_floor_area = unmet
        _write(
            out_dir,
            "masses.geojson",
            _json_bytes(massing_mod.masses_to_geojson(masses)),
            paths,
        )
        _write(out_dir, "masses.obj", masses_to_obj(masses), paths)
    except Exception as exc:
        raise StageError("masses", exc) from exc

    try:
        amenities = {}
        for program in scenario.amenity_programs:
            pts = [
                (m.footprint.centroid.x, m.footprint.centroid.y)
                for m in bundle.masses
                if m.program_areas.get(program, 0.0) > 0
            ]
            if pts:
                amenities[program] = pts
        shares = {p.name: p.share for p in scenario.programs}
        bundle.metrics = metrics_mod.compute_metrics(
            bundle.network,
            bundle.parcels,
            bundle.masses,
            scenario.eui,
            scenario.solar,
            amenities=amenities,
            shares=shares,
            unmet=bundle.unmet_floor_area,
        )
        _write(
            out_dir,
            "metrics.json",
            _json_bytes(
                {
                    "scenario_hash": scenario.hash,
                    "params": bundle.params,
                    "metrics": bundle.metrics.to_dict(),
                }
            ),
            paths,
        )
    except Exception as exc:
        raise StageError("metrics", exc) from exc

    _write(out_dir, "plan.svg", render_plan(bundle), paths)
    return bundle


def _height_color(h, h_max):
    t = 0.0 if h_max <= 0 else min(1.0, h / h_max)
    r = int(70 + t * (200 - 70))
    g = int(130 - t * 90)
    b = int(180 - t * 140)
    return f"#{r:02x}{g:02x}{b:02x}"


_CLUSTER_FILL = {"large": "#c9d8ea", "small": "#dce9d2"}


def render_plan(bundle, size=720.0):
    """Deterministic orthographic plan: streets by level width, parcels
    tinted by cluster, building masses tinted by height."""
    boundary = None
    if bundle.network is not None and bundle.network.boundary is not None:
        boundary = bundle.network.boundary
    polys = [p.polygon for p in bundle.parcels]
    if boundary is None and not polys:
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" '
            f'height="{size:g}" viewBox="0 0 {size:g} {size:g}"/>'
        ).encode("utf-8")

    if boundary is not None:
        minx, miny, maxx, maxy = boundary.bounds
    else:
        bounds = np.array([p.bounds for p in polys])
        minx, miny = bounds[:, 0].min(), bounds[:, 1].min()
        maxx, maxy = bounds[:, 2].max(), bounds[:, 3].max()
    span = max(maxx - minx, maxy - miny) or 1.0
    scale = size / span

    def tx(x):
        return (x - minx) * scale

    def ty(y):
        return (maxy - y) * scale

    def ring_path(coords):
        return " ".join(f"{tx(x):.3f},{ty(y):.3f}" for x, y in coords)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
        f'<rect width="{size:g}" height="{size:g}" fill="#f7f6f2"/>',
    ]
    if boundary is not None:
        parts.append(
            f'<polygon class="boundary" points="{ring_path(boundary.exterior.coords)}" '
            'fill="none" stroke="#888888" stroke-width="1"/>'
        )

    parts.append('<g class="parcels">')
    for p in bundle.parcels:
        fill = _CLUSTER_FILL.get(p.cluster, "#dddddd") if p.buildable else "#e8e6e1"
        parts.append(
            f'<polygon points="{ring_path(p.polygon.exterior.coords)}" fill="{fill}" '
            'stroke="#aaaaaa" stroke-width="0.5"/>'
        )
    parts.append("</g>")

    parts.append('<g class="streets">')
    if bundle.network is not None:
        for e in bundle.network.edges:
            w = max(1.0, e.width * scale)
            pts = " ".join(f"{tx(x):.3f},{ty(y):.3f}" for x, y in e.points)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#4a4a4a" '
                f'stroke-width="{w:.3f}" stroke-linecap="round"/>'
            )
    parts.append("</g>")

    h_max = max((m.height for m in bundle.masses), default=0.0)
    parts.append('<g class="masses">')
    for m in bundle.masses:
        parts.append(
            f'<polygon points="{ring_path(m.footprint.exterior.coords)}" '
            f'fill="{_height_color(m.height, h_max)}" fill-opacity="0.9" '
            'stroke="#222222" stroke-width="0.4"/>'
        )
    parts.append("</g></svg>")
    return "\n".join(parts).encode("utf-8")


def masses_to_obj(masses):
    """Wavefront OBJ of the extruded masses (triangulated caps, quad walls)."""
    lines = ["# fieldfab building masses"]
    v_count = 0
    for idx, m in enumerate(masses):
        poly = m.footprint
        h = m.height
        tris = []
        for tri in triangulate(poly):
            c = tri.centroid
            if poly.covers(c):
                tris.append(list(tri.exterior.coords)[:3])
        lines.append(f"o mass_{idx}")
        local = {}

        def vid(x, y, z):
            nonlocal v_count
            key = (round(x, 9), round(y, 9), round(z, 9))
            if key not in local:
                v_count += 1
                local[key] = v_count
                lines.append(f"v {key[0]:.6f} {key[1]:.6f} {key[2]:.6f}")
            return local[key]

        for tri in tris:
            bottom = [vid(x, y, 0.0) for x, y in tri]
            top = [vid(x, y, h) for x, y in tri]
            lines.append("f " + " ".join(str(i) for i in reversed(bottom)))
            lines.append("f " + " ".join(str(i) for i in top))
        rings = [poly.exterior.coords] + [r.coords for r in poly.interiors]
        for ring in rings:
            coords = list(ring)
            for a, b in zip(coords[:-1], coords[1:]):
                if math.hypot(b[0] - a[0], b[1] - a[1]) <= 0:
                    continue
                quad = [
                    vid(a[0], a[1], 0.0),
                    vid(b[0], b[1], 0.0),
                    vid(b[0], b[1], h),
                    vid(a[0], a[1], h),
                ]
                lines.append("f " + " ".join(str(i) for i in quad))
    return "\n".join(lines) + "\n"
