"""
COW and DPS over distance and leak
==================================

Sweep a (distance, leak) grid for the coherent one-way and differential
phase shift protocols and write the ratio heatmaps next to this script.
"""
from pathlib import Path

import numpy as np

from qkdlc import SweepGrid, sweep
from qkdlc.export import emit_csv, emit_svg_heatmap

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

distances = np.linspace(10, 150, 15)
leaks = np.linspace(0.005, 0.1, 12)

for pair in ("cow", "dps"):
    records = sweep(SweepGrid(distances, leaks, pair=pair), workers=4)
    emit_csv(records, out / f"{pair}_sweep.csv")
    emit_svg_heatmap(records, "ratio", "log", out / f"{pair}_ratio.svg", title=f"{pair.upper()}: line control gain")

    at_100 = [r for r in records if r.distance_km == 100.0]
    print(f"{pair.upper()} at 100 km:")
    for r in at_100[::3]:
        print(f"  r_E = {r.leak_fraction:.4f}  x_lc = {r.intensity_lc:6.2f}  "
              f"x_base = {r.intensity_base:.4f}  ratio = {r.ratio:7.2f}")

# line control does not pay everywhere: on a short line a big tap costs Bob
# more signal than it denies Eve
short = sweep(SweepGrid([5.0, 10.0], [0.1, 0.2, 0.3], pair="cow"))
for r in short:
    print(f"COW D = {r.distance_km:4.1f} km, r_E = {r.leak_fraction:.1f}: ratio {r.ratio:.3f}")
