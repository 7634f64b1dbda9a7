"""Street networks from eigenvector tracing.

Traces two canonical cases: an orthogonal grid from a uniform field and
rings + spokes from a circular field, then a two-level network whose
second level quarters the first level's blocks.  GeoJSON goes to
demos/out/.
"""
import json
import math
import pathlib

import numpy as np
from shapely.geometry import Polygon

from fieldfab import ConstraintElement, GridSpec, make_default_field, make_element_field
from fieldfab.streamtrace import TraceParams, generate_network

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def save(name, net):
    path = OUT / name
    path.write_text(json.dumps(net.to_geojson(), sort_keys=True))
    faces = len(net.edges) - len(net.nodes) + 1
    print(f"{name}: {len(net.nodes)} nodes, {len(net.edges)} edges, ~{faces} blocks")


# 1. uniform field -> Manhattan grid (11x11 intersections at 100 m spacing)
W = 1000.0
boundary = Polygon([(0, 0), (W, 0), (W, W), (0, W)])
field = make_default_field(GridSpec((0, 0), W, W, 11, 11), 0.0, 20.0)
net = generate_network(
    field, (500.0, 500.0),
    [TraceParams(boundary=boundary, seed_spacing=100.0, step=20.0)],
    widths={0: 12.0},
)
save("grid_network.geojson", net)

# 2. circular field -> concentric rings and radial spokes
R = 130.0
half = 1.5 * R
cboundary = Polygon([(-half, -half), (half, -half), (half, half), (-half, half)])
cgrid = GridSpec((-half, -half), 2 * half, 2 * half, 161, 161)
circular = make_element_field(
    cgrid, ConstraintElement("point", np.zeros(2), theta=math.pi / 2, magnitude=3.0)
)
cnet = generate_network(
    circular, (R, 0.0),
    [TraceParams(boundary=cboundary, seed_spacing=45.0, step=3.0, max_steps=4000)],
    widths={0: 8.0},
)
save("radial_network.geojson", cnet)

# 3. two levels: the second level's midpoint seeds quarter every block
levels = [
    TraceParams(boundary=boundary, seed_spacing=200.0, step=20.0),
    TraceParams(boundary=boundary, seed_spacing=100.0, step=20.0),
]
two = generate_network(field, (400.0, 400.0), levels, widths={0: 14.0, 1: 8.0})
save("two_level_network.geojson", two)
