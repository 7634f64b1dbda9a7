"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured runtime and asserting the stated budget."""
import json
import math
import time
import warnings

import numpy as np
import pytest
from shapely.geometry import LineString, Polygon
from shapely.ops import unary_union

from fieldfab.fieldkit import (
    ConstraintElement,
    GridSpec,
    combine_fields,
    decay_factor,
    make_default_field,
    make_element_field,
)
from fieldfab.massing import MassingParams, height_from_pdm, parcel_ratios
from fieldfab.metrics import SolarConfig, betweenness, pv_yield
from fieldfab.parcelize import Block, SubdivisionParams, cluster_parcels, obb_split, subdivide
from fieldfab.streamtrace import (
    MAJOR,
    SegmentIndex,
    TraceParams,
    generate_level,
    generate_network,
    node_streamlines,
    trace_streamline,
)
from fieldfab.sweep import ParameterSpace, export_csv, lhs_sample, pareto_front, run_sweep

from test_metrics import graph, oracle_betweenness, random_connected_graph
from test_massing import ratio_field, parcel, rect
from test_streamtrace import random_field
from test_sweep import oracle_pareto_indices

PI = math.pi


class Criterion:
    def __init__(self, name, budget_s):
        self.name = name
        self.budget = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[acceptance] {status} {self.name} ({elapsed:.1f}s / budget {self.budget:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name} exceeded {self.budget}s"
        return False


def spearman(x, y):
    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        vs = np.asarray(v)[order]
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and vs[j + 1] == vs[i]:
                j += 1
            r[order[i : j + 1]] = 0.5 * (i + j) + 1.0
            i = j + 1
        return r

    rx, ry = ranks(x), ranks(y)
    return float(np.corrcoef(rx, ry)[0, 1])


def test_field_algebra_property_suite():
    with Criterion("field algebra", 10.0):
        rng = np.random.default_rng(100)
        grid = GridSpec((-5.0, -5.0), 10.0, 10.0, 11, 11)

        # Eq-3 single-element reduction is bitwise
        for _ in range(10):
            elem = ConstraintElement(
                "point", rng.uniform(-4, 4, 2), theta=rng.uniform(0, 2 * PI),
                weight=1.0, decay=0.0, radius=rng.uniform(2, 20),
            )
            alone = make_element_field(grid, elem)
            combined = combine_fields([elem], grid=grid)
            assert np.array_equal(alone.angle, combined.angle)
            assert np.array_equal(alone.magnitude, combined.magnitude)

        # weight scaling: magnitudes scale, angles invariant (mod pi)
        for _ in range(10):
            elems = [
                ConstraintElement(
                    "point", rng.uniform(-4, 4, 2), theta=rng.uniform(0, 2 * PI),
                    weight=rng.uniform(0.2, 2.0),
                )
                for _ in range(3)
            ]
            c = rng.uniform(0.3, 4.0)
            scaled = [
                ConstraintElement(e.kind, e.coords, e.theta, c * e.weight)
                for e in elems
            ]
            f1 = combine_fields(elems, grid=grid)
            f2 = combine_fields(scaled, grid=grid)
            mask = f1.magnitude > 0
            assert np.allclose(f2.magnitude[mask], c * f1.magnitude[mask], rtol=1e-9)
            d = np.abs(f1.angle - f2.angle) % PI
            assert np.all(np.minimum(d, PI - d)[mask] < 1e-9)

        # rotational equivariance against the analytic radial pattern
        nodes = grid.node_positions()
        for _ in range(20):
            theta = rng.uniform(0, 2 * PI)
            alpha = rng.uniform(0, 2 * PI)
            f = make_element_field(
                grid, ConstraintElement("point", np.zeros(2), theta=theta + alpha)
            )
            expect = np.mod(theta + alpha + np.arctan2(nodes[:, 1], nodes[:, 0]), PI)
            d = np.abs(f.angle.ravel() - expect) % PI
            d = np.minimum(d, PI - d)
            assert np.all(d[f.magnitude.ravel() > 0] < 1e-9)

        # decay monotone, exactly 1 on the influence boundary
        for _ in range(20):
            elem = ConstraintElement(
                "point", np.zeros(2), decay=rng.uniform(0, 3), radius=rng.uniform(0.1, 4)
            )
            dd = np.sort(rng.uniform(0, 12, 30))
            fs = [decay_factor((v, 0.0), elem) for v in dd]
            assert all(a >= b - 1e-15 for a, b in zip(fs, fs[1:]))
            assert decay_factor((elem.radius, 0.0), elem) == 1.0


def test_tracing_oracles():
    with Criterion("tracing oracle", 60.0):
        # orthogonal grid: 11x11 intersections +/- one row/column
        W = 1000.0
        boundary = Polygon([(0, 0), (W, 0), (W, W), (0, W)])
        field = make_default_field(GridSpec((0, 0), W, W, 11, 11), 0.0, 20.0)
        net = generate_network(
            field, (500.0, 500.0),
            [TraceParams(boundary=boundary, seed_spacing=100.0, step=20.0)],
        )
        count = int((net.degrees() >= 2).sum())
        assert abs(count - 121) <= 12, count

        # circular field: closed loop, radial RSD < 2% at step = r/50
        R = 100.0
        half = 1.3 * R
        cboundary = Polygon([(-half, -half), (half, -half), (half, half), (-half, half)])
        cgrid = GridSpec((-half, -half), 2 * half, 2 * half, 261, 261)
        celem = ConstraintElement("point", np.zeros(2), theta=PI / 2, magnitude=R / 50)
        cfield = make_element_field(cgrid, celem)
        cparams = TraceParams(
            boundary=cboundary, seed_spacing=15.0, d_sep=15.0, step=R / 50, max_steps=3000
        )
        loop = trace_streamline(cfield, (R, 0.0), MAJOR, cparams, SegmentIndex(15.0))
        assert loop.closed
        radii = np.hypot(loop.points[:, 0], loop.points[:, 1])
        assert radii.std() / radii.mean() < 0.02

        # same-family spacing >= d_test across 20 random fields
        for seed in range(20):
            rfield, rboundary = random_field(seed)
            params = TraceParams(
                boundary=rboundary, seed_spacing=60.0, step=10.0, max_steps=800
            )
            lines, _ = generate_level(
                rfield, [(150.0, 150.0)], MAJOR, params, SegmentIndex(60.0)
            )
            geoms = [LineString(ln.points) for ln in lines if len(ln) > 1]
            for i in range(len(geoms)):
                for j in range(i + 1, len(geoms)):
                    if lines[i].eigen != lines[j].eigen:
                        continue
                    if geoms[i].intersects(geoms[j]):
                        continue
                    assert geoms[i].distance(geoms[j]) >= params.d_test * (1 - 1e-9)


def test_geometry_conservation():
    with Criterion("geometry conservation", 30.0):
        # OBB split halves a rectangle exactly
        a, b = obb_split(rect(4.0, 2.0))
        assert a.area == pytest.approx(4.0, abs=1e-12)
        assert b.area == pytest.approx(4.0, abs=1e-12)

        from fieldfab.parcelize import inflate_and_block

        rng = np.random.default_rng(200)
        for seed in range(10):
            field, boundary = random_field(seed + 50)
            params = TraceParams(
                boundary=boundary, seed_spacing=70.0, step=10.0, max_steps=800
            )
            net = generate_network(field, (150.0, 150.0), [params], widths={0: 8.0})
            blocks = inflate_and_block(net, {0: 8.0}, boundary, sliver_area=1.0)
            corridors = unary_union(
                [LineString(e.points).buffer(4.0) for e in net.edges]
            ).intersection(boundary)
            sub = SubdivisionParams(
                targets={"large": (900.0, 2400.0), "small": (200.0, 700.0)},
                max_aspect=5.0,
            )
            cluster_parcels(blocks, ("threshold", 1500.0))
            parcel_area = 0.0
            for block in blocks:
                parcels = subdivide(block, sub)
                block_sum = sum(p.area for p in parcels)
                assert block_sum == pytest.approx(block.area, rel=0.005)
                parcel_area += block_sum
            total = parcel_area + corridors.area
            assert total == pytest.approx(boundary.area, rel=0.005)


def test_building_height_equation():
    with Criterion("height equation", 10.0):
        lot = parcel(rect(30.0, 30.0))
        params = MassingParams(
            population=10_000.0, story_height=3.0, operational_fraction=0.8,
            per_person_area=36.0,
        )
        mass = height_from_pdm(lot, 0.01, params)
        assert mass.height == 15.0
        assert mass.stories == 5

        # homogeneity pre-clamp: H(cD, P) = H(D, cP) = c H(D, P)
        def raw_height(d, p):
            return (d * p * 36.0 * 3.0) / (0.8 * 900.0)

        rng = np.random.default_rng(300)
        for _ in range(50):
            d = rng.uniform(1e-4, 0.05)
            p = rng.uniform(1e3, 5e4)
            c = rng.uniform(0.1, 10.0)
            assert raw_height(c * d, p) == pytest.approx(c * raw_height(d, p), rel=1e-12)
            assert raw_height(d, c * p) == pytest.approx(c * raw_height(d, p), rel=1e-12)

        # population conservation after renormalization over parcels
        field = ratio_field(rng.uniform(0.1, 1.0, (8, 8)))
        parcels = [
            parcel(rect(14.0, 14.0)),
            parcel(rect(14.0, 14.0, origin=(16.0, 0.0))),
            parcel(rect(30.0, 14.0, origin=(0.0, 16.0))),
        ]
        ratios = parcel_ratios(field, parcels)
        masses = [height_from_pdm(p, float(r), params) for p, r in zip(parcels, ratios)]
        assert sum(m.population for m in masses) == pytest.approx(
            params.population, abs=1.0
        )


def test_betweenness_exactness():
    with Criterion("betweenness oracle", 30.0):
        bc = betweenness(graph([(0, 1, 1), (1, 2, 1)]))
        assert bc[1] == pytest.approx(1.0)
        bc = betweenness(graph([(0, 1, 1), (0, 2, 1), (0, 3, 1)]))
        assert bc[0] == pytest.approx(3.0)
        bc = betweenness(graph([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]))
        assert all(v == pytest.approx(0.5) for v in bc.values())

        rng = np.random.default_rng(400)
        for _ in range(200):
            adj = random_connected_graph(rng, max_nodes=8)
            mine = betweenness(adj)
            ref = oracle_betweenness(adj)
            for v in adj:
                assert mine[v] == pytest.approx(ref[v], abs=1e-9)


def test_pareto_and_lhs():
    with Criterion("pareto + lhs", 10.0):
        rng = np.random.default_rng(500)
        rows = [
            {"x": float(a), "y": float(b), "z": float(c)}
            for a, b, c in rng.uniform(0, 1, size=(1000, 3))
        ]
        objectives = [("x", "min"), ("y", "max"), ("z", "min")]
        front = pareto_front(rows, objectives)
        expected = oracle_pareto_indices(
            [(r["x"], r["y"], r["z"]) for r in rows], [-1.0, 1.0, -1.0]
        )
        front_ids = {id(r) for r in front}
        assert [i for i, r in enumerate(rows) if id(r) in front_ids] == expected

        for _ in range(100):
            n = int(rng.integers(1, 40))
            seed = int(rng.integers(0, 100_000))
            space = ParameterSpace.from_ranges(
                {"a": (0.0, 1.0), "b": (-5.0, 5.0)}, seed=seed
            )
            vectors = lhs_sample(space, n)
            for name, (lo, hi) in [("a", (0.0, 1.0)), ("b", (-5.0, 5.0))]:
                strata = sorted(
                    min(n - 1, int((v[name] - lo) / (hi - lo) * n)) for v in vectors
                )
                assert strata == list(range(n))


@pytest.mark.slow
def test_case_study_trends(synthetic_scenario):
    with Criterion("case-study trends", 300.0):
        space = ParameterSpace.from_values(
            {
                "seed_spacing": [70.0, 85.0, 100.0, 120.0, 140.0],
                "population": [2000.0, 4000.0, 6000.0, 8000.0, 10000.0],
            }
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results = run_sweep(synthetic_scenario, space)
        ok = [r for r in results if r.ok]
        assert len(ok) == 25
        rho = spearman(
            [r.params["seed_spacing"] for r in ok],
            [r.metrics.betweenness_mean for r in ok],
        )
        assert rho < 0.0, rho

        # growing uniform stories on a 3x3 block must not raise pv per floor
        from test_metrics import box_mass

        solar = SolarConfig()
        per_floor = []
        for stories in range(1, 11):
            masses = [
                box_mass(20.0, 20.0, stories, origin=(30.0 * i, 30.0 * j))
                for i in range(3)
                for j in range(3)
            ]
            pv, _ = pv_yield(masses, solar)
            per_floor.append(pv / sum(m.floor_area for m in masses))
        assert all(a >= b - 1e-9 for a, b in zip(per_floor, per_floor[1:]))


@pytest.mark.slow
def test_end_to_end_determinism(synthetic_scenario, tmp_path):
    with Criterion("determinism", 120.0):
        space = ParameterSpace.from_values(
            {"seed_spacing": [100.0, 130.0], "population": [3000.0]}
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            csv1 = export_csv(run_sweep(synthetic_scenario, space), param_names=space.names)
            csv2 = export_csv(run_sweep(synthetic_scenario, space), param_names=space.names)
        assert csv1 == csv2

        from fieldfab.pipeline import generate

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            generate(synthetic_scenario, {"seed_spacing": 110.0}, out_dir=str(tmp_path / "a"))
            generate(synthetic_scenario, {"seed_spacing": 110.0}, out_dir=str(tmp_path / "b"))
        m1 = (tmp_path / "a" / "metrics.json").read_bytes()
        m2 = (tmp_path / "b" / "metrics.json").read_bytes()
        assert m1 == m2
