"""Record service responses used by the front-end tests.

Run from the repository root after changing the Python side:

    python3 frontend/test/make_fixtures.py
"""
import json
import pathlib
import time
import warnings

from fastapi.testclient import TestClient

from fieldfab import load_scenario
from fieldfab.service import create_app
from fieldfab.sweep import parse_csv

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = pathlib.Path(__file__).parent / "fixtures"
OUT.mkdir(exist_ok=True)

warnings.simplefilter("ignore")
scenario = load_scenario(ROOT / "src" / "fieldfab" / "data" / "synthetic.toml")
client = TestClient(create_app(scenario))


def dump(name, payload):
    (OUT / name).write_text(json.dumps(payload, sort_keys=True, indent=1))
    print("wrote", name)


dump("scenario.json", client.get("/scenario").json())

for stage in ("field", "network", "parcels", "masses", "metrics"):
    dump(f"{stage}.json", client.post("/generate", params={"stage": stage}).json())

# the same scenario with one extra constraint element, as the editor commits it
edited = json.loads(json.dumps(scenario.raw))
edited["field"]["elements"].append(
    {
        "kind": "polyline",
        "coords": [[50.0, 50.0], [250.0, 180.0], [450.0, 220.0]],
        "theta": 1.5707963,
        "weight": 1.0,
        "decay": 0.015,
        "radius": 80.0,
        "magnitude": 10.0,
    }
)
put = client.put("/scenario", json=edited)
assert put.status_code == 200, put.text
dump("scenario_edited_put.json", put.json())
dump("network_edited.json", client.post("/generate", params={"stage": "network"}).json())

# small sweep -> CSV, then the service-side Pareto of its rows
r = client.post(
    "/sweep",
    json={"space": {"seed_spacing": [80.0, 100.0, 130.0], "population": [3000.0, 8000.0]}},
)
job = r.json()["job_id"]
while True:
    r = client.get(f"/sweep/{job}")
    if r.headers.get("content-type", "").startswith("text/csv"):
        break
    time.sleep(0.5)
(OUT / "sweep.csv").write_bytes(r.content)
print("wrote sweep.csv")

header, rows = parse_csv(r.content)
objectives = [["out:REP", "max"], ["out:betweenness_mean", "min"], ["out:FAR", "max"]]
points = [{k: row[k] for k in header if k != "img"} for row in rows]
pareto = client.post("/pareto", json={"points": points, "objectives": objectives})
dump("pareto.json", {"objectives": objectives, "indices": pareto.json()["indices"]})
