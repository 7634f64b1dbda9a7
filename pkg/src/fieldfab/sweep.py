"""Design-space sampling, variant execution, Pareto filtering, CSV export.

A parameter space holds named ranges (for Latin hypercube sampling) or
explicit value lists (for full-factorial grids).  Variants run the whole
generation pipeline and collect one metrics record each; the results table
exports in the Design-Explorer CSV convention (in:/out: column prefixes)
and can be filtered down to its non-dominated subset.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from itertools import product

import numpy as np

from .metrics import MetricsRecord


class SweepError(ValueError):
    """Invalid sweep input."""


RANGE = "range"
VALUES = "values"

#: CSV/display names for metric columns; attribute names are lowercase
_DISPLAY = {"far": "FAR", "rep": "REP"}
CSV_METRICS = tuple(_DISPLAY.get(f, f) for f in MetricsRecord.FIELDS)


def metric_attr(display_name):
    name = display_name
    return {v: k for k, v in _DISPLAY.items()}.get(name, name)


@dataclass
class ParameterSpace:
    """Named parameters, each a (lo, hi) range or an explicit value list."""

    entries: dict
    seed: int = 0

    @classmethod
    def from_ranges(cls, ranges, seed=0):
        return cls({k: (RANGE, float(lo), float(hi)) for k, (lo, hi) in ranges.items()}, seed)

    @classmethod
    def from_values(cls, values, seed=0):
        return cls({k: (VALUES, tuple(v)) for k, v in values.items()}, seed)

    def __post_init__(self):
        if not self.entries:
            raise SweepError("parameter space is empty")
        for name, entry in self.entries.items():
            if entry[0] == RANGE:
                lo, hi = entry[1], entry[2]
                if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
                    raise SweepError(f"parameter {name!r}: range must satisfy lo < hi")
            elif entry[0] == VALUES:
                if len(entry[1]) == 0:
                    raise SweepError(f"parameter {name!r}: empty value list")
            else:
                raise SweepError(f"parameter {name!r}: unknown entry kind {entry[0]!r}")

    @property
    def names(self):
        return list(self.entries)


def lhs_sample(space, n, rng_seed=None):
    """Latin hypercube sample: n vectors hitting each of n equal strata
    exactly once per dimension; deterministic for a given seed."""
    if n < 1:
        raise SweepError("lhs sample size must be >= 1")
    for name, entry in space.entries.items():
        if entry[0] != RANGE:
            raise SweepError(f"lhs sampling needs range parameters; {name!r} is a list")
    rng = np.random.default_rng(space.seed if rng_seed is None else rng_seed)
    columns = {}
    for name, (_, lo, hi) in space.entries.items():
        strata = rng.permutation(n)
        offsets = rng.random(n)
        columns[name] = lo + (strata + offsets) / n * (hi - lo)
    return [{name: float(columns[name][k]) for name in space.entries} for k in range(n)]


def grid_sample(space):
    """Full Cartesian product of the value lists, row-major in declaration
    order."""
    for name, entry in space.entries.items():
        if entry[0] != VALUES:
            raise SweepError(f"grid sampling needs value lists; {name!r} is a range")
    names = space.names
    lists = [space.entries[n][1] for n in names]
    return [dict(zip(names, combo)) for combo in product(*lists)]


@dataclass
class VariantResult:
    params: dict
    metrics: MetricsRecord = None
    artifacts: dict = dataclass_field(default_factory=dict)
    status: str = "ok"
    reason: str = ""
    wall_time: float = 0.0

    @property
    def ok(self):
        return self.status == "ok"

    def to_json_record(self):
        rec = {
            "params": {k: v for k, v in self.params.items()},
            "status": self.status,
            "wall_time": round(self.wall_time, 6),
        }
        if self.reason:
            rec["reason"] = self.reason
        if self.metrics is not None:
            rec["metrics"] = self.metrics.to_dict()
        if self.artifacts:
            rec["artifacts"] = {k: str(v) for k, v in self.artifacts.items()}
        return rec


def run_variant(scenario, params, out_dir=None):
    """Run the whole pipeline for one parameter vector.

    Any stage failure is captured as a failed result carrying the stage
    name; nothing propagates, so a sweep survives individual geometric
    failures.
    """
    from . import pipeline

    start = time.perf_counter()
    try:
        bundle = pipeline.generate(scenario, params, out_dir=out_dir)
        return VariantResult(
            params=dict(params),
            metrics=bundle.metrics,
            artifacts=dict(bundle.artifact_paths),
            status="ok",
            wall_time=time.perf_counter() - start,
        )
    except pipeline.StageError as exc:
        return VariantResult(
            params=dict(params),
            status="failed",
            reason=f"{exc.stage}: {exc}",
            wall_time=time.perf_counter() - start,
        )
    except Exception as exc:  # noqa: BLE001 - sweep must not abort
        return VariantResult(
            params=dict(params),
            status="failed",
            reason=f"unexpected: {exc}",
            wall_time=time.perf_counter() - start,
        )


def _objective_value(result, name):
    attr = metric_attr(name)
    if isinstance(result, dict):
        if name in result:
            return float(result[name])
        return float(result[attr])
    metrics = result.metrics if isinstance(result, VariantResult) else result
    return float(getattr(metrics, attr))


def pareto_front(results, objectives):
    """Non-dominated subset of the results, input order preserved.

    ``objectives`` maps metric name -> "min" | "max" (or is a list of
    such pairs).  A result is dominated when some other is at least as
    good in every objective and strictly better in one.
    """
    if isinstance(objectives, dict):
        objectives = list(objectives.items())
    if not objectives:
        raise SweepError("at least one objective is required")
    senses = []
    for name, sense in objectives:
        if sense not in ("min", "max"):
            raise SweepError(f"objective {name!r}: sense must be min or max")
        senses.append((name, 1.0 if sense == "max" else -1.0))

    pool = [r for r in results if not isinstance(r, VariantResult) or r.ok]
    if not pool:
        raise SweepError("no successful results to filter")
    scores = np.array(
        [[sign * _objective_value(r, name) for name, sign in senses] for r in pool]
    )

    # processing in lexicographic descending order guarantees any dominator
    # is seen before the points it dominates
    order = sorted(range(len(pool)), key=lambda i: tuple(-scores[i]))
    front_rows = []
    keep = set()
    for i in order:
        row = scores[i]
        dominated = False
        for j in front_rows:
            other = scores[j]
            if np.all(other >= row) and np.any(other > row):
                dominated = True
                break
        if not dominated:
            front_rows.append(i)
            keep.add(i)
    return [pool[i] for i in range(len(pool)) if i in keep]


def _fmt(value):
    if isinstance(value, str):
        return value
    v = float(value)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.6g}"


def export_csv(results, param_names=None, metric_names=None):
    """Design-Explorer style CSV: in:<param>, out:<metric>, img columns.

    Only successful variants become rows; numbers carry at most six
    significant digits; UTF-8 with LF line endings.
    """
    ok = [r for r in results if r.ok]
    if param_names is None:
        param_names = list(ok[0].params) if ok else []
    if metric_names is None:
        metric_names = list(CSV_METRICS)

    header = (
        [f"in:{p}" for p in param_names]
        + [f"out:{m}" for m in metric_names]
        + ["img"]
    )
    lines = [",".join(header)]
    for r in ok:
        row = [_fmt(r.params[p]) for p in param_names]
        row += [_fmt(_objective_value(r, m)) for m in metric_names]
        row.append(str(r.artifacts.get("img", "")))
        lines.append(",".join(row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_csv(data):
    """Round-trip reader for export_csv output (used by tests and tools)."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = [ln for ln in text.split("\n") if ln]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        row = {}
        for key, cell in zip(header, cells):
            if key == "img":
                row[key] = cell
            else:
                row[key] = float(cell) if cell else math.nan
        rows.append(row)
    return header, rows


def _worker_run(raw_scenario, params, out_dir):
    from . import pipeline

    scenario = pipeline.Scenario.from_dict(raw_scenario)
    return run_variant(scenario, params, out_dir=out_dir)


def max_workers():
    env = os.environ.get("FIELDFAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def run_sweep(scenario, space, n_lhs=None, out_dir=None, workers=None, artifact_variants=False):
    """Sample the space, run every variant, and collect ordered results.

    Grid sampling is used when every parameter is a value list, LHS (with
    ``n_lhs`` samples) when every parameter is a range.  Results keep
    submission order regardless of worker parallelism.
    """
    kinds = {entry[0] for entry in space.entries.values()}
    if kinds == {VALUES}:
        vectors = grid_sample(space)
    elif kinds == {RANGE}:
        if not n_lhs:
            raise SweepError("LHS sweep needs a sample count")
        vectors = lhs_sample(space, n_lhs)
    else:
        raise SweepError("mixing ranges and value lists in one space is unsupported")

    workers = workers or max_workers()
    variant_dir = None
    results = []
    if workers > 1:
        raw = scenario.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = []
            for k, vec in enumerate(vectors):
                if out_dir is not None and artifact_variants:
                    variant_dir = os.path.join(out_dir, f"variant_{k:04d}")
                futures.append(pool.submit(_worker_run, raw, vec, variant_dir))
            results = [f.result() for f in futures]
    else:
        for k, vec in enumerate(vectors):
            if out_dir is not None and artifact_variants:
                variant_dir = os.path.join(out_dir, f"variant_{k:04d}")
            results.append(run_variant(scenario, vec, out_dir=variant_dir))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_bytes = export_csv(results, param_names=space.names)
        with open(os.path.join(out_dir, "sweep.csv"), "wb") as fh:
            fh.write(csv_bytes)
        with open(os.path.join(out_dir, "results.jsonl"), "w", encoding="utf-8") as fh:
            for r in results:
                fh.write(json.dumps(r.to_json_record(), sort_keys=True) + "\n")
    return results
