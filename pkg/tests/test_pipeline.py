import json
import subprocess
import sys
import warnings
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from fieldfab.pipeline import (
    Scenario,
    ScenarioError,
    StageError,
    generate,
    load_scenario,
    render_plan,
    scenario_hash,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "fieldfab" / "data" / "synthetic.toml"

MINIMAL = {
    "boundary": {"rect": [0, 0, 400, 400]},
    "grid": {"nx": 32, "ny": 32},
    "maps": {"pdm": {"rows": [[1, 2], [3, 4]]}},
    "trace": {"seed_spacing": 120.0, "level_ratios": [1.0], "step": 15.0},
    "subdivision": {"street_widths": [10.0]},
}


class TestScenario:
    def test_minimal_config_gets_defaults(self):
        scen = Scenario.from_dict(MINIMAL)
        assert scen.massing.story_height == 3.0
        assert scen.massing.operational_fraction == 0.8
        assert [p.name for p in scen.programs] == [
            "residential", "office", "education", "retail_food",
        ]
        assert scen.subdivision.targets["small"][0] > 0

    def test_missing_boundary_listed(self):
        with pytest.raises(ScenarioError) as err:
            Scenario.from_dict({"maps": {"pdm": {"rows": [[1]]}}})
        assert any(e.startswith("scenario/boundary: required") for e in err.value.errors)

    def test_error_list_is_complete_not_first_only(self):
        bad = dict(MINIMAL)
        bad = json.loads(json.dumps(MINIMAL))
        del bad["maps"]
        bad["trace"]["seed_spacing"] = -5.0
        with pytest.raises(ScenarioError) as err:
            Scenario.from_dict(bad)
        assert len(err.value.errors) >= 2

    def test_same_file_same_hash(self):
        s1 = load_scenario(DATA)
        s2 = load_scenario(DATA)
        assert s1.hash == s2.hash

    def test_override_changes_hash_deterministically(self, synthetic_scenario):
        a = synthetic_scenario.with_overrides({"seed_spacing": 80.0})
        b = synthetic_scenario.with_overrides({"seed_spacing": 80.0})
        c = synthetic_scenario.with_overrides({"seed_spacing": 90.0})
        assert a.hash == b.hash != c.hash != synthetic_scenario.hash

    def test_dotted_override_path(self, synthetic_scenario):
        s = synthetic_scenario.with_overrides({"massing.story_height": 4.0})
        assert s.massing.story_height == 4.0

    def test_json_config_supported(self, tmp_path):
        path = tmp_path / "scen.json"
        path.write_text(json.dumps(MINIMAL))
        scen = load_scenario(path)
        assert scen.boundary.area == pytest.approx(160000.0)

    def test_hash_is_canonical_under_key_order(self):
        a = scenario_hash({"x": 1, "y": {"a": 2, "b": 3}})
        b = scenario_hash({"y": {"b": 3, "a": 2}, "x": 1})
        assert a == b


@pytest.mark.slow
class TestGenerate:
    def test_bundle_files_written_and_parse(self, synthetic_scenario, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bundle = generate(
                synthetic_scenario,
                {"seed_spacing": 110.0, "population": 4000.0},
                out_dir=str(tmp_path),
            )
        names = {p.name for p in tmp_path.iterdir()}
        assert names == {
            "network.geojson", "parcels.geojson", "masses.geojson",
            "masses.obj", "metrics.json", "plan.svg",
        }
        for geo in ("network.geojson", "parcels.geojson", "masses.geojson"):
            data = json.loads((tmp_path / geo).read_text())
            assert data["type"] == "FeatureCollection"
        obj = (tmp_path / "masses.obj").read_text()
        assert obj.splitlines()[0].startswith("#")
        assert any(line.startswith("v ") for line in obj.splitlines())
        ET.fromstring((tmp_path / "plan.svg").read_bytes())
        meta = json.loads((tmp_path / "metrics.json").read_text())
        assert meta["scenario_hash"]
        assert meta["metrics"]["rep"] == pytest.approx(
            meta["metrics"]["pv_yield"] - meta["metrics"]["energy_demand"]
        )
        assert bundle.metrics is not None

    def test_stage_error_keeps_partial_artifacts(self, synthetic_scenario, tmp_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(StageError) as err:
                generate(
                    synthetic_scenario,
                    {"subdivision.street_widths": [600.0, 600.0]},
                    out_dir=str(tmp_path),
                )
        assert err.value.stage == "parcels"
        assert (tmp_path / "network.geojson").exists()
        assert not (tmp_path / "metrics.json").exists()

    def test_rerun_is_byte_identical(self, synthetic_scenario, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            generate(synthetic_scenario, {"seed_spacing": 120.0}, out_dir=str(out1))
            generate(synthetic_scenario, {"seed_spacing": 120.0}, out_dir=str(out2))
        for name in ("metrics.json", "network.geojson", "plan.svg", "masses.obj"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_render_plan_element_counts(self, synthetic_bundle):
        svg = render_plan(synthetic_bundle)
        root = ET.fromstring(svg)
        ns = {"s": "http://www.w3.org/2000/svg"}
        groups = {g.attrib["class"]: g for g in root.findall("s:g", ns)}
        assert len(groups["streets"].findall("s:polyline", ns)) == len(
            synthetic_bundle.network.edges
        )
        assert len(groups["parcels"].findall("s:polygon", ns)) == len(
            synthetic_bundle.parcels
        )
        assert len(groups["masses"].findall("s:polygon", ns)) == len(
            synthetic_bundle.masses
        )

    def test_render_plan_empty_bundle_is_valid_svg(self):
        from fieldfab.pipeline import DesignBundle

        svg = render_plan(DesignBundle(scenario_hash="x", params={}))
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")

    def test_render_plan_deterministic(self, synthetic_bundle):
        assert render_plan(synthetic_bundle) == render_plan(synthetic_bundle)


@pytest.mark.slow
class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "fieldfab.cli", *args],
            capture_output=True,
            text=True,
        )

    def test_validate_ok(self):
        proc = self.run_cli("validate", "-c", str(DATA))
        assert proc.returncode == 0
        assert proc.stdout.startswith("ok ")

    def test_validate_reports_errors(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text('[grid]\nnx = 8\n')
        proc = self.run_cli("validate", "-c", str(bad))
        assert proc.returncode == 1
        assert "scenario/boundary: required" in proc.stderr

    def test_generate_writes_bundle(self, tmp_path):
        out = tmp_path / "out"
        proc = self.run_cli(
            "generate", "-c", str(DATA), "-o", str(out),
            "--seed-spacing", "120", "--population", "3000",
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "metrics.json").exists()
        metrics = json.loads(proc.stdout)
        assert "far" in metrics

    def test_sweep_cli(self, tmp_path):
        space = tmp_path / "space.toml"
        space.write_text(
            "[params]\nseed_spacing = [110.0, 130.0]\npopulation = [3000.0]\n"
        )
        out = tmp_path / "results"
        proc = self.run_cli("sweep", "-c", str(DATA), "-s", str(space), "-o", str(out))
        assert proc.returncode == 0, proc.stderr
        csv = (out / "sweep.csv").read_text()
        assert csv.startswith("in:seed_spacing,in:population,")
        assert len(csv.strip().split("\n")) == 3


class TestScenarioMapsFromFile:
    def test_pgm_path_map_loads(self, tmp_path):
        pgm = tmp_path / "pdm.pgm"
        pgm.write_bytes(b"P2\n2 2\n255\n10 20 30 40")
        raw = json.loads(json.dumps(MINIMAL))
        raw["maps"] = {"pdm": {"path": "pdm.pgm"}}
        scen_file = tmp_path / "scen.json"
        scen_file.write_text(json.dumps(raw))
        scen = load_scenario(scen_file)
        assert scen.maps["pdm"].values.sum() == pytest.approx(1.0)

    def test_missing_map_file_listed(self, tmp_path):
        raw = json.loads(json.dumps(MINIMAL))
        raw["maps"] = {"pdm": {"path": "nope.pgm"}}
        scen_file = tmp_path / "scen.json"
        scen_file.write_text(json.dumps(raw))
        with pytest.raises(ScenarioError) as err:
            load_scenario(scen_file)
        assert any("maps/pdm" in e for e in err.value.errors)
