"""Scenario configuration: parsing, validation, defaults and hashing.

A scenario is a TOML or JSON document describing one design problem: the
boundary, constraint elements, scalar maps, program mix, massing rules,
tracing levels, subdivision targets and scoring tables.  Validation
collects every defect (with a JSON-pointer-ish path) instead of stopping
at the first; the canonical merged dict hashes stably for caching.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .fieldkit import (
    ConstraintElement,
    FieldError,
    GridSpec,
    ScalarField,
    TensorField,
    combine_fields,
    load_scalar_map,
    make_default_field,
)
from .massing import MassingParams, ProgramSpec, check_program_shares
from .metrics import MetricsError, SolarConfig, check_eui_table
from .parcelize import ParcelizeError, SubdivisionParams
from .streamtrace import TraceError, TraceParams


class ScenarioError(ValueError):
    """Scenario validation failed; ``errors`` lists every defect."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


DEFAULTS = {
    "seed": 0,
    "grid": {"nx": 128, "ny": 128, "pad": 0.0},
    "field": {"theta": 0.0, "magnitude": 20.0, "elements": []},
    "maps": {},
    "programs": [
        {"name": "residential", "share": 0.60, "per_person_area": 36.0},
        {"name": "office", "share": 0.20, "per_person_area": 10.5},
        {"name": "education", "share": 0.05, "per_person_area": 9.0},
        {"name": "retail_food", "share": 0.15, "per_person_area": 2.5},
    ],
    "massing": {
        "mode": "pdm",
        "population": 5000.0,
        "story_height": 3.0,
        "operational_fraction": 0.8,
        "per_person_area": 36.0,
        "max_aspect": 5.0,
        "min_footprint_area": 50.0,
        "setback": 0.0,
    },
    "trace": {
        "seed_spacing": 100.0,
        "level_ratios": [1.0, 0.5],
        "max_steps": 2000,
    },
    "subdivision": {
        "street_widths": [12.0, 8.0],
        "max_aspect": 4.0,
        "sliver_area": 1.0,
        "cluster": {"method": "threshold", "area": 2000.0},
        "targets": {
            "large": {"area_min": 1500.0, "area_max": 3500.0},
            "small": {"area_min": 300.0, "area_max": 900.0},
        },
    },
    "solar": {
        "roof_irradiation": 1200.0,
        "facade_irradiation": {
            "N": 350.0,
            "NE": 450.0,
            "E": 650.0,
            "SE": 800.0,
            "S": 900.0,
            "SW": 800.0,
            "W": 650.0,
            "NW": 450.0,
        },
        "roof_fraction": 0.8,
        "facade_fraction": 0.4,
        "efficiency": 0.2,
        "obstruction_radius": 50.0,
    },
    # editable placeholder targets (kWh/m2/yr), not authoritative values
    "eui": {"residential": 40.0, "office": 80.0, "education": 60.0, "retail_food": 120.0},
    "metrics": {
        "objectives": [["REP", "max"], ["betweenness_mean", "min"]],
        "amenity_programs": ["office", "education", "retail_food"],
    },
}


def _deep_merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if key in out and isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def scenario_hash(raw):
    blob = json.dumps(_canonical(raw), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _boundary_polygon(raw, errors):
    spec = raw.get("boundary")
    if not isinstance(spec, dict):
        errors.append("scenario/boundary: required")
        return None
    if "rect" in spec:
        rect = spec["rect"]
        if not (isinstance(rect, (list, tuple)) and len(rect) == 4):
            errors.append("scenario/boundary/rect: expected [x, y, width, height]")
            return None
        x, y, w, h = (float(v) for v in rect)
        if w <= 0 or h <= 0:
            errors.append("scenario/boundary/rect: width and height must be > 0")
            return None
        return Polygon([(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
    if "polygon" in spec:
        pts = spec["polygon"]
        if not (isinstance(pts, (list, tuple)) and len(pts) >= 3):
            errors.append("scenario/boundary/polygon: need at least 3 vertices")
            return None
        poly = Polygon([(float(p[0]), float(p[1])) for p in pts])
        if not poly.is_valid or poly.area <= 0:
            errors.append("scenario/boundary/polygon: not a simple polygon")
            return None
        return poly
    errors.append("scenario/boundary: needs rect or polygon")
    return None


@dataclass
class Scenario:
    raw: dict
    hash: str
    boundary: Polygon
    access_points: list
    grid: GridSpec
    elements: list
    maps: dict
    programs: list
    massing: MassingParams
    solar: SolarConfig
    eui: dict
    subdivision: SubdivisionParams
    objectives: list
    amenity_programs: list
    initial_seed: object
    seed: int

    @classmethod
    def from_dict(cls, data, base_dir=None):
        raw = _canonical(_deep_merge(DEFAULTS, data or {}))
        errors = []

        boundary = _boundary_polygon(raw, errors)
        access = []
        bspec = raw.get("boundary")
        bspec = bspec if isinstance(bspec, dict) else {}
        for k, p in enumerate(bspec.get("access_points", [])):
            try:
                access.append(np.array([float(p[0]), float(p[1])]))
            except (TypeError, ValueError, IndexError):
                errors.append(f"scenario/boundary/access_points/{k}: expected [x, y]")

        grid = None
        g = raw["grid"]
        if boundary is not None:
            try:
                nx, ny = int(g["nx"]), int(g["ny"])
                pad = float(g.get("pad", 0.0))
                minx, miny, maxx, maxy = boundary.bounds
                grid = GridSpec(
                    (minx - pad, miny - pad),
                    (maxx - minx) + 2 * pad,
                    (maxy - miny) + 2 * pad,
                    nx,
                    ny,
                )
            except (FieldError, ValueError, KeyError) as exc:
                errors.append(f"scenario/grid: {exc}")

        maps = {}
        if grid is not None:
            for name, spec in raw["maps"].items():
                path = f"scenario/maps/{name}"
                role = spec.get("role") or {
                    "pdm": "population-ratio",
                    "street_density": "street-density",
                }.get(name, "program-ratio" if name.startswith("bpm_") else "magnitude")
                try:
                    if "rows" in spec:
                        values = np.asarray(spec["rows"], dtype=float)
                        sf = load_scalar_map(
                            _rows_to_text(values), grid, role
                        )
                    elif "path" in spec:
                        import os

                        fname = spec["path"]
                        if base_dir and not os.path.isabs(fname):
                            fname = os.path.join(base_dir, fname)
                        with open(fname, "rb") as fh:
                            sf = load_scalar_map(fh.read(), grid, role)
                    else:
                        errors.append(f"{path}: needs rows or path")
                        continue
                    maps[name] = sf
                except (FieldError, OSError, ValueError) as exc:
                    errors.append(f"{path}: {exc}")

        elements = []
        if grid is not None:
            for k, espec in enumerate(raw["field"].get("elements", [])):
                path = f"scenario/field/elements/{k}"
                try:
                    magnitude = espec.get("magnitude", raw["field"]["magnitude"])
                    if "magnitude_map" in espec:
                        ref = espec["magnitude_map"]
                        if ref not in maps:
                            errors.append(f"{path}/magnitude_map: unknown map {ref!r}")
                            continue
                        scale = float(espec.get("magnitude_scale", 1.0))
                        src = maps[ref]
                        magnitude = ScalarField(grid, src.values * scale, "magnitude")
                    elements.append(
                        ConstraintElement(
                            kind=espec.get("kind", "point"),
                            coords=np.asarray(espec["coords"], dtype=float),
                            theta=float(espec.get("theta", 0.0)),
                            weight=float(espec.get("weight", 1.0)),
                            decay=float(espec.get("decay", 0.0)),
                            radius=float(espec.get("radius", math.inf)),
                            magnitude=magnitude,
                        )
                    )
                except (FieldError, KeyError, TypeError, ValueError) as exc:
                    errors.append(f"{path}: {exc}")

        programs = []
        try:
            for k, p in enumerate(raw["programs"]):
                bpm = maps.get(f"bpm_{p['name']}")
                programs.append(
                    ProgramSpec(p["name"], float(p["share"]), float(p["per_person_area"]), bpm)
                )
            check_program_shares(programs)
        except (KeyError, ValueError) as exc:
            errors.append(f"scenario/programs: {exc}")

        massing = None
        try:
            m = raw["massing"]
            if m.get("mode", "pdm") not in ("pdm", "bpm"):
                raise ValueError(f"unknown massing mode {m.get('mode')!r}")
            massing = MassingParams(
                population=float(m["population"]),
                story_height=float(m["story_height"]),
                operational_fraction=float(m["operational_fraction"]),
                per_person_area=float(m["per_person_area"]),
                max_aspect=float(m["max_aspect"]),
                min_footprint_area=float(m["min_footprint_area"]),
                setback=float(m.get("setback", 0.0)),
            )
            if m.get("mode", "pdm") == "pdm" and "pdm" not in maps:
                errors.append("scenario/maps/pdm: required for massing mode 'pdm'")
            if m.get("mode") == "bpm" and not any(n.startswith("bpm_") for n in maps):
                errors.append("scenario/maps: massing mode 'bpm' needs at least one bpm_* map")
        except (KeyError, ValueError) as exc:
            errors.append(f"scenario/massing: {exc}")

        solar = None
        try:
            s = raw["solar"]
            solar = SolarConfig(
                roof_irradiation=float(s["roof_irradiation"]),
                facade_irradiation={k: float(v) for k, v in s["facade_irradiation"].items()},
                roof_fraction=float(s["roof_fraction"]),
                facade_fraction=float(s["facade_fraction"]),
                efficiency=float(s["efficiency"]),
                obstruction_radius=float(s["obstruction_radius"]),
            )
        except (KeyError, MetricsError, ValueError) as exc:
            errors.append(f"scenario/solar: {exc}")

        eui = dict(raw["eui"])
        try:
            check_eui_table(eui, [p["name"] for p in raw["programs"]])
        except (MetricsError, KeyError) as exc:
            errors.append(f"scenario/eui: {exc}")

        subdivision = None
        try:
            sub = raw["subdivision"]
            cl = sub["cluster"]
            if cl["method"] == "threshold":
                cluster = ("threshold", float(cl["area"]))
            elif cl["method"] == "percentile":
                pois = [tuple(map(float, p)) for p in cl.get("pois", [])]
                cluster = ("percentile", float(cl["q"]), pois)
            else:
                raise ValueError(f"unknown cluster method {cl['method']!r}")
            targets = {
                name: (float(t["area_min"]), float(t["area_max"]))
                for name, t in sub["targets"].items()
            }
            widths = {i: float(w) for i, w in enumerate(sub["street_widths"])}
            subdivision = SubdivisionParams(
                targets=targets,
                max_aspect=float(sub["max_aspect"]),
                street_widths=widths,
                cluster=cluster,
                sliver_area=float(sub["sliver_area"]),
            )
        except (KeyError, ParcelizeError, ValueError) as exc:
            errors.append(f"scenario/subdivision: {exc}")

        tr = raw["trace"]
        ratios = tr.get("level_ratios", [1.0])
        if any(b >= a for a, b in zip(ratios, ratios[1:])) or any(r <= 0 for r in ratios):
            errors.append("scenario/trace/level_ratios: must be positive and strictly decreasing")
        if float(tr.get("seed_spacing", 0)) <= 0:
            errors.append("scenario/trace/seed_spacing: must be > 0")
        if subdivision is not None and len(ratios) > len(subdivision.street_widths):
            errors.append("scenario/subdivision/street_widths: need one width per trace level")

        initial_seed = None
        if "initial_seed" in tr:
            try:
                initial_seed = np.array([float(tr["initial_seed"][0]), float(tr["initial_seed"][1])])
            except (TypeError, ValueError, IndexError):
                errors.append("scenario/trace/initial_seed: expected [x, y]")

        met = raw["metrics"]
        objectives = [(str(n), str(s)) for n, s in met.get("objectives", [])]
        for name, sense in objectives:
            if sense not in ("min", "max"):
                errors.append(f"scenario/metrics/objectives: sense for {name!r} must be min|max")

        if errors:
            raise ScenarioError(errors)

        return cls(
            raw=raw,
            hash=scenario_hash(raw),
            boundary=boundary,
            access_points=access,
            grid=grid,
            elements=elements,
            maps=maps,
            programs=programs,
            massing=massing,
            solar=solar,
            eui=eui,
            subdivision=subdivision,
            objectives=objectives,
            amenity_programs=list(met.get("amenity_programs", [])),
            initial_seed=initial_seed,
            seed=int(raw.get("seed", 0)),
        )

    def to_dict(self):
        return json.loads(json.dumps(self.raw))

    def with_overrides(self, params):
        """New scenario with sweep parameters applied.

        ``seed_spacing`` and ``population`` map to their canonical config
        slots; any other name is a dotted path into the raw dict.
        """
        raw = self.to_dict()
        for name, value in (params or {}).items():
            if name == "seed_spacing":
                raw.setdefault("trace", {})["seed_spacing"] = float(value)
            elif name == "population":
                raw.setdefault("massing", {})["population"] = float(value)
            else:
                node = raw
                keys = name.split(".")
                for key in keys[:-1]:
                    node = node.setdefault(key, {})
                node[keys[-1]] = value
        return Scenario.from_dict(raw)

    def trace_levels(self):
        tr = self.raw["trace"]
        spacing = float(tr["seed_spacing"])
        step = float(tr["step"]) if "step" in tr else None
        levels = []
        for ratio in tr.get("level_ratios", [1.0]):
            levels.append(
                TraceParams(
                    boundary=self.boundary,
                    seed_spacing=spacing * ratio,
                    step=step,
                    max_steps=int(tr.get("max_steps", 2000)),
                )
            )
        return levels

    def street_widths(self):
        return dict(self.subdivision.street_widths)

    def build_field(self):
        """Default + combined element tensor field on the scenario grid."""
        theta = float(self.raw["field"]["theta"])
        magnitude = float(self.raw["field"]["magnitude"])
        default = make_default_field(self.grid, theta, magnitude)
        density = self.maps.get("street_density")
        if density is not None:
            mean = float(density.values.mean())
            if mean > 0:
                default = TensorField(
                    self.grid, default.angle, magnitude * density.values / mean
                )
        if not self.elements:
            return default
        weight = float(self.raw["field"].get("weight", 0.0))
        return combine_fields(self.elements, default, default_weight=weight)


def _rows_to_text(values):
    return "\n".join(" ".join(f"{v:.10g}" for v in row) for row in np.atleast_2d(values))


def load_scenario(path):
    """Read and validate a scenario file (TOML by default, JSON by suffix)."""
    import os

    with open(path, "rb") as fh:
        data = fh.read()
    if str(path).endswith(".json"):
        raw = json.loads(data.decode("utf-8"))
    else:
        raw = tomllib.loads(data.decode("utf-8"))
    return Scenario.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))
