"""Tensor fields from constraint elements.

Builds a default field, imprints a point and a polyline element, combines
them with weights and decay, and writes debug exports (magnitude PGM,
angle CSV, and a quiver plot when matplotlib is available) to demos/out/.
"""
import math
import pathlib

import numpy as np

from fieldfab import (
    ConstraintElement,
    GridSpec,
    combine_fields,
    make_default_field,
    make_element_field,
)
from fieldfab.fieldkit import field_angles_to_csv, field_magnitude_to_pgm

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

grid = GridSpec((0.0, 0.0), 400.0, 400.0, 41, 41)

# a uniform fallback orientation, slightly rotated
default = make_default_field(grid, theta=0.15, magnitude=10.0)

# a landmark: streets near it run tangentially (quarter-turned radial)
landmark = ConstraintElement(
    "point", np.array([120.0, 280.0]), theta=math.pi / 2,
    weight=1.5, decay=0.01, radius=90.0, magnitude=10.0,
)

# an existing road: streets align with it inside its corridor
road = ConstraintElement(
    "polyline", np.array([[0.0, 60.0], [220.0, 120.0], [400.0, 140.0]]),
    theta=math.pi / 2, weight=1.0, decay=0.02, radius=60.0, magnitude=10.0,
)

field = combine_fields([landmark, road], default, default_weight=0.8)

(OUT / "field_magnitude.pgm").write_bytes(field_magnitude_to_pgm(field))
(OUT / "field_angles.csv").write_text(field_angles_to_csv(field))
print("wrote", OUT / "field_magnitude.pgm")
print("wrote", OUT / "field_angles.csv")

single = make_element_field(grid, landmark)
print("landmark-only field: degenerate nodes =", int(single.degenerate_mask().sum()))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pos = grid.node_positions()
    u = np.cos(field.angle.ravel())
    v = np.sin(field.angle.ravel())
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.quiver(pos[:, 0], pos[:, 1], u, v, field.magnitude.ravel(),
              headwidth=0, headlength=0, headaxislength=0, pivot="mid", cmap="viridis")
    ax.plot(*landmark.coords, "r*", markersize=14)
    ax.plot(road.coords[:, 0], road.coords[:, 1], "r-", lw=2)
    ax.set_aspect("equal")
    ax.set_title("combined line field (color = step length)")
    fig.savefig(OUT / "field_quiver.png", dpi=120)
    print("wrote", OUT / "field_quiver.png")
except ImportError:
    print("matplotlib not installed; skipped the quiver plot")
