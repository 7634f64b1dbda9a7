"""JSON-over-HTTP service around the pipeline (studio backend).

Scenarios are immutable snapshots keyed by their canonical hash; replacing
one is atomic and every response names the hash it was computed from, so
concurrent reads need no locking.  Sweeps run as background jobs that are
polled for status and CSV results.
"""
from __future__ import annotations

import threading
import uuid

from fastapi import Body, FastAPI, HTTPException, Query, Response

from . import pipeline, sweep as sweep_mod
from .pipeline import Scenario, ScenarioError, StageError
from .parcelize import parcels_to_geojson
from .massing import masses_to_geojson


def create_app(scenario=None):
    app = FastAPI(title="fieldfab", docs_url=None, redoc_url=None)
    state = {"scenario": scenario}
    jobs = {}
    lock = threading.Lock()

    def current():
        scen = state["scenario"]
        if scen is None:
            raise HTTPException(status_code=400, detail="no scenario loaded")
        return scen

    @app.get("/healthz")
    def healthz():
        scen = state["scenario"]
        return {"ok": True, "scenario_hash": scen.hash if scen else None}

    @app.put("/scenario")
    def put_scenario(body: dict = Body(...)):
        try:
            scen = Scenario.from_dict(body)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail={"errors": exc.errors})
        state["scenario"] = scen
        return {"scenario_hash": scen.hash}

    @app.get("/scenario")
    def get_scenario():
        scen = current()
        return {"scenario_hash": scen.hash, "scenario": scen.raw}

    @app.post("/generate")
    def post_generate(
        stage: str = Query("metrics"), body: dict = Body(default=None)
    ):
        if stage not in pipeline.STAGES:
            raise HTTPException(status_code=400, detail=f"unknown stage {stage!r}")
        scen = current()
        params = (body or {}).get("params") or {}
        try:
            if params:
                scen = scen.with_overrides(params)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail={"errors": exc.errors})
        try:
            if stage == "field":
                payload = pipeline.field_payload(scen.build_field())
            else:
                bundle = pipeline.generate(scen, None)
                if stage == "network":
                    payload = bundle.network.to_geojson()
                elif stage == "parcels":
                    payload = parcels_to_geojson(bundle.parcels)
                elif stage == "masses":
                    payload = masses_to_geojson(bundle.masses)
                else:
                    payload = {
                        "metrics": bundle.metrics.to_dict(),
                        "unmet_floor_area": bundle.unmet_floor_area,
                    }
        except StageError as exc:
            raise HTTPException(
                status_code=500, detail={"stage": exc.stage, "error": str(exc)}
            )
        return {"scenario_hash": scen.hash, "stage": stage, "payload": payload}

    def _run_job(job_id, scen, space, n_lhs):
        try:
            results = sweep_mod.run_sweep(scen, space, n_lhs=n_lhs)
            csv_bytes = sweep_mod.export_csv(results, param_names=space.names)
            with lock:
                jobs[job_id].update(
                    status="done",
                    csv=csv_bytes,
                    ok=sum(1 for r in results if r.ok),
                    failed=sum(1 for r in results if not r.ok),
                )
        except Exception as exc:  # noqa: BLE001 - job must record its failure
            with lock:
                jobs[job_id].update(status="failed", error=str(exc))

    @app.post("/sweep")
    def post_sweep(body: dict = Body(...)):
        scen = current()
        space_spec = body.get("space") or {}
        entries = {}
        for name, spec in space_spec.items():
            if isinstance(spec, dict) and "lo" in spec and "hi" in spec:
                entries[name] = (sweep_mod.RANGE, float(spec["lo"]), float(spec["hi"]))
            elif isinstance(spec, (list, tuple)):
                entries[name] = (sweep_mod.VALUES, tuple(spec))
            else:
                raise HTTPException(
                    status_code=400,
                    detail=f"parameter {name!r}: expected a value list or lo/hi range",
                )
        try:
            space = sweep_mod.ParameterSpace(entries, seed=int(body.get("seed", scen.seed)))
        except sweep_mod.SweepError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        n_lhs = body.get("n")
        job_id = uuid.uuid4().hex[:12]
        with lock:
            jobs[job_id] = {"status": "running", "scenario_hash": scen.hash}
        thread = threading.Thread(
            target=_run_job, args=(job_id, scen, space, n_lhs), daemon=True
        )
        thread.start()
        return {"job_id": job_id, "scenario_hash": scen.hash}

    @app.get("/sweep/{job_id}")
    def get_sweep(job_id: str):
        with lock:
            job = jobs.get(job_id)
            snapshot = dict(job) if job else None
        if snapshot is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        scen = state["scenario"]
        if (
            snapshot["status"] == "running"
            and scen is not None
            and scen.hash != snapshot["scenario_hash"]
        ):
            raise HTTPException(
                status_code=409,
                detail="scenario changed while the job is still running",
            )
        if snapshot["status"] == "done":
            return Response(
                content=snapshot["csv"],
                media_type="text/csv",
                headers={"X-Scenario-Hash": snapshot["scenario_hash"]},
            )
        body = {k: v for k, v in snapshot.items() if k != "csv"}
        return body

    @app.post("/pareto")
    def post_pareto(body: dict = Body(...)):
        points = body.get("points") or []
        objectives = [(str(n), str(s)) for n, s in (body.get("objectives") or [])]
        if not points or not objectives:
            raise HTTPException(status_code=400, detail="points and objectives required")
        try:
            front = sweep_mod.pareto_front(points, objectives)
        except (sweep_mod.SweepError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        keep = {id(p) for p in front}
        return {"indices": [i for i, p in enumerate(points) if id(p) in keep]}

    return app


def serve(scenario, host="127.0.0.1", port=8080):
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(scenario), host=host, port=port, log_level="warning")
