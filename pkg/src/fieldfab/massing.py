"""Building masses from parcels plus density / program maps.

Two workflows: a population density map drives heights directly
(people per lot -> floor demand -> stories), or per-program maps allocate
floor-area targets across parcels and the summed demand sets the height.
Aspect-ratio and footprint-area constraints clamp the results afterwards;
clamped-away floor area is reported, never redistributed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np
import shapely

from .fieldkit import ScalarField
from .parcelize import _obb_axes, polygon_to_geojson

PROGRAMS = ("residential", "office", "education", "retail_food")


class MassingError(ValueError):
    """Invalid massing input."""


@dataclass
class ProgramSpec:
    name: str
    share: float
    per_person_area: float
    bpm: ScalarField = None

    def __post_init__(self):
        if self.per_person_area <= 0:
            raise MassingError(f"program {self.name}: per-person area must be > 0")
        if self.share < 0:
            raise MassingError(f"program {self.name}: share must be >= 0")


def check_program_shares(programs):
    total = sum(p.share for p in programs)
    if abs(total - 1.0) > 1e-9:
        raise MassingError(f"program shares must sum to 1, got {total}")


@dataclass
class MassingParams:
    population: float = 0.0
    story_height: float = 3.0
    operational_fraction: float = 0.8
    per_person_area: float = 36.0
    max_aspect: float = 5.0
    min_footprint_area: float = 50.0
    setback: float = 0.0

    def __post_init__(self):
        if self.population < 0:
            raise MassingError("population must be >= 0")
        if self.story_height <= 0:
            raise MassingError("story height must be > 0")
        if not 0 < self.operational_fraction <= 1:
            raise MassingError("operational fraction must be in (0, 1]")
        if self.per_person_area <= 0:
            raise MassingError("per-person area must be > 0")


@dataclass
class BuildingMass:
    parcel: object
    footprint: object
    stories: int
    story_height: float
    program_areas: dict = dataclass_field(default_factory=dict)
    population: float = 0.0
    clamped_aspect: bool = False
    clamped_area: bool = False

    @property
    def height(self):
        return self.stories * self.story_height

    @property
    def footprint_area(self):
        return float(self.footprint.area)

    @property
    def floor_area(self):
        return float(sum(self.program_areas.values()))

    def to_feature(self):
        return {
            "type": "Feature",
            "geometry": polygon_to_geojson(self.footprint),
            "properties": {
                "height_m": self.height,
                "stories": self.stories,
                "program_areas": {k: float(v) for k, v in sorted(self.program_areas.items())},
                "population": float(self.population),
                "clamped_aspect": self.clamped_aspect,
                "clamped_area": self.clamped_area,
            },
        }


def accumulate_ratio(field, parcel):
    """Sum of field node values whose positions fall inside the parcel."""
    poly = parcel.polygon if hasattr(parcel, "polygon") else parcel
    nodes = field.grid.node_positions()
    inside = shapely.intersects_xy(poly, nodes[:, 0], nodes[:, 1])
    return float(field.values.ravel()[inside].sum())


def parcel_ratios(field, parcels):
    """Per-parcel accumulated ratios with unique node assignment.

    Every grid node lands in at most one parcel (first containing parcel
    in list order wins) and the result is renormalized so the ratios sum
    to one over the given parcels.  Parcels covering no node get ratio 0
    and trigger a grid-coverage warning.
    """
    nodes = field.grid.node_positions()
    flat = field.values.ravel()
    taken = np.zeros(len(nodes), dtype=bool)
    sums = np.zeros(len(parcels))
    hits = np.zeros(len(parcels), dtype=int)
    for k, parcel in enumerate(parcels):
        poly = parcel.polygon if hasattr(parcel, "polygon") else parcel
        inside = shapely.intersects_xy(poly, nodes[:, 0], nodes[:, 1]) & ~taken
        taken |= inside
        sums[k] = flat[inside].sum()
        hits[k] = int(inside.sum())

    uncovered = int((hits == 0).sum())
    if uncovered:
        warnings.warn(
            f"{uncovered} of {len(parcels)} parcels cover no grid node; "
            "the grid is too coarse for them",
            stacklevel=2,
        )
    total = sums.sum()
    if total > 0:
        sums = sums / total
    return sums


def height_from_pdm(parcel, ratio, params, program_mix=None):
    """Building mass for one parcel from its accumulated population ratio.

    Height follows ratio * population * per_person_area * story_height /
    (operational_fraction * footprint_area); stories round to the nearest
    whole floor (at least one once the lot houses >= 1 person).
    """
    poly = parcel.polygon if hasattr(parcel, "polygon") else parcel
    footprint = poly if params.setback <= 0 else poly.buffer(-params.setback)
    area = float(footprint.area)
    if area <= 1e-9:
        raise MassingError("parcel footprint area is zero; not buildable")

    people = ratio * params.population
    s = params.story_height
    height = (people * params.per_person_area * s) / (params.operational_fraction * area)
    stories = max(1, round(height / s)) if people >= 1.0 else 0

    total_floor = stories * area * params.operational_fraction
    mix = program_mix if program_mix else {"residential": 1.0}
    mix_total = sum(mix.values())
    areas = {
        name: total_floor * frac / mix_total for name, frac in mix.items() if frac > 0
    }
    return BuildingMass(parcel, footprint, stories, s, areas, population=people)


def allocate_programs(parcels, programs, targets, params):
    """Distribute per-program floor-area targets over parcels via their maps.

    Each program's map is accumulated per parcel (ratios normalized over
    the given parcels); floor area = target * ratio.  The summed demand
    divided by usable plate area (footprint * operational fraction),
    rounded up, sets the story count.  Parcels accruing nothing stay open
    space.
    """
    ratio_table = {}
    for spec in programs:
        if spec.bpm is None:
            continue
        ratio_table[spec.name] = parcel_ratios(spec.bpm, parcels)

    masses = []
    s = params.story_height
    for k, parcel in enumerate(parcels):
        poly = parcel.polygon if hasattr(parcel, "polygon") else parcel
        footprint = poly if params.setback <= 0 else poly.buffer(-params.setback)
        area = float(footprint.area)
        if area <= 1e-9:
            continue
        program_areas = {}
        for spec in programs:
            target = targets.get(spec.name, 0.0)
            ratios = ratio_table.get(spec.name)
            if target <= 0 or ratios is None:
                continue
            floor = target * float(ratios[k])
            if floor > 0:
                program_areas[spec.name] = floor
        total = sum(program_areas.values())
        if total <= 0:
            continue
        stories = math.ceil(total / (area * params.operational_fraction))
        res_area = program_areas.get("residential", 0.0)
        population = res_area / params.per_person_area if res_area else 0.0
        masses.append(
            BuildingMass(parcel, footprint, stories, s, program_areas, population=population)
        )
    return masses


def apply_constraints(masses, max_aspect, min_area, story_height=None):
    """Clamp stories to the aspect limit and drop sub-minimum footprints.

    Returns (surviving masses, displaced floor area).  Displaced area is
    the floor space removed by clamping; it is reported, not moved to
    other lots.
    """
    kept = []
    displaced = 0.0
    for mass in masses:
        s = story_height or mass.story_height
        if mass.footprint_area < min_area:
            displaced += mass.floor_area
            mass.clamped_area = True
            continue
        axes = _obb_axes(mass.footprint)
        width = axes[4] if axes else 0.0
        if width > 0 and mass.height > max_aspect * width:
            max_stories = int(math.floor(max_aspect * width / s))
            max_stories = max(max_stories, 0)
            if max_stories < mass.stories:
                old_total = mass.floor_area
                factor = max_stories / mass.stories if mass.stories else 0.0
                mass.program_areas = {
                    k: v * factor for k, v in mass.program_areas.items()
                }
                mass.stories = max_stories
                mass.clamped_aspect = True
                displaced += old_total - mass.floor_area
        if mass.stories <= 0:
            displaced += mass.floor_area
            continue
        kept.append(mass)
    return kept, displaced


def masses_to_geojson(masses):
    return {
        "type": "FeatureCollection",
        "features": [m.to_feature() for m in masses],
    }
