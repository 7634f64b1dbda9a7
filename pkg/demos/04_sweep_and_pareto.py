"""Design-space exploration: grid sweep, Pareto filtering, CSV export.

Sweeps seed spacing x population on the bundled scenario (a small 3x3
grid so the demo stays quick), prints the non-dominated set, and writes
the Design-Explorer CSV plus the result log to demos/out/sweep/.
"""
import pathlib
import warnings

from fieldfab import load_scenario
from fieldfab.sweep import ParameterSpace, lhs_sample, pareto_front, run_sweep

HERE = pathlib.Path(__file__).parent
OUT = HERE / "out" / "sweep"
SCENARIO = HERE.parent / "src" / "fieldfab" / "data" / "synthetic.toml"

scenario = load_scenario(SCENARIO)

space = ParameterSpace.from_values(
    {"seed_spacing": [75.0, 100.0, 130.0], "population": [3000.0, 6000.0, 9000.0]}
)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    results = run_sweep(scenario, space, out_dir=OUT)

ok = [r for r in results if r.ok]
print(f"{len(ok)}/{len(results)} variants ok; CSV at {OUT/'sweep.csv'}")
print(f"{'spacing':>8} {'pop':>6} {'FAR':>6} {'REP':>14} {'bc_mean':>9}")
for r in ok:
    m = r.metrics
    print(
        f"{r.params['seed_spacing']:8.0f} {r.params['population']:6.0f} "
        f"{m.far:6.2f} {m.rep:14.0f} {m.betweenness_mean:9.1f}"
    )

front = pareto_front(ok, [("REP", "max"), ("betweenness_mean", "min"), ("FAR", "max")])
print("\nnon-dominated designs:")
for r in front:
    print("  spacing %.0f, population %.0f" % (r.params["seed_spacing"], r.params["population"]))

# Latin hypercube sampling is the alternative when parameters are ranges
lhs_space = ParameterSpace.from_ranges(
    {"seed_spacing": (70.0, 140.0), "population": (2000.0, 10000.0)}, seed=11
)
print("\nLHS sample (n=5):")
for vec in lhs_sample(lhs_space, 5):
    print("  spacing %.1f, population %.0f" % (vec["seed_spacing"], vec["population"]))
