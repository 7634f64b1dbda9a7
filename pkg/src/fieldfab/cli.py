"""Command line entry points: generate, sweep, serve, validate."""
from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import sweep as sweep_mod
from .pipeline import ScenarioError, StageError, generate, load_scenario


def _load_space(path, default_seed=0):
    with open(path, "rb") as fh:
        if str(path).endswith(".json"):
            raw = json.loads(fh.read().decode("utf-8"))
        else:
            raw = tomllib.loads(fh.read().decode("utf-8"))
    entries = {}
    for name, spec in (raw.get("params") or {}).items():
        if isinstance(spec, dict) and "lo" in spec and "hi" in spec:
            entries[name] = (sweep_mod.RANGE, float(spec["lo"]), float(spec["hi"]))
        elif isinstance(spec, (list, tuple)):
            entries[name] = (sweep_mod.VALUES, tuple(spec))
        else:
            raise SystemExit(f"space parameter {name!r}: expected value list or lo/hi table")
    space = sweep_mod.ParameterSpace(entries, seed=int(raw.get("seed", default_seed)))
    return space, raw.get("n"), raw.get("failure_tolerance", 0)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fieldfab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="run the pipeline once and write artifacts")
    p_gen.add_argument("-c", "--scenario", required=True)
    p_gen.add_argument("-o", "--out", required=True)
    p_gen.add_argument("--seed-spacing", type=float)
    p_gen.add_argument("--population", type=float)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep and export CSV")
    p_sweep.add_argument("-c", "--scenario", required=True)
    p_sweep.add_argument("-s", "--space", required=True)
    p_sweep.add_argument("-o", "--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--artifacts", action="store_true", help="write per-variant bundles")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("-c", "--scenario", required=True)
    p_serve.add_argument("--bind", default="127.0.0.1:8080")

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("-c", "--scenario", required=True)

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            scen = load_scenario(args.scenario)
        except ScenarioError as exc:
            for err in exc.errors:
                print(err, file=sys.stderr)
            return 1
        print(f"ok {scen.hash}")
        return 0

    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 1

    if args.command == "generate":
        params = {}
        if args.seed_spacing is not None:
            params["seed_spacing"] = args.seed_spacing
        if args.population is not None:
            params["population"] = args.population
        try:
            bundle = generate(scenario, params, out_dir=args.out)
        except StageError as exc:
            print(f"stage {exc.stage} failed: {exc}", file=sys.stderr)
            return 1
        print(json.dumps(bundle.metrics.to_dict(), indent=1, sort_keys=True))
        return 0

    if args.command == "sweep":
        space, n_lhs, tolerance = _load_space(args.space, scenario.seed)
        results = sweep_mod.run_sweep(
            scenario,
            space,
            n_lhs=n_lhs,
            out_dir=args.out,
            workers=args.workers,
            artifact_variants=args.artifacts,
        )
        failed = [r for r in results if not r.ok]
        print(f"{len(results) - len(failed)} ok, {len(failed)} failed -> {args.out}")
        return 0 if len(failed) <= tolerance else 1

    if args.command == "serve":
        from .service import serve

        host, _, port = args.bind.rpartition(":")
        serve(scenario, host=host or "127.0.0.1", port=int(port))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
