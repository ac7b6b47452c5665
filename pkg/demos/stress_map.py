"""Where the piston force comes from: the interaction stress at one frequency.

The map shows ``<T_xy>`` of the TM field with the isolated-body parts
removed, at ``w = 1`` (units of ``2 pi c/a``), for the metal piston with
``h = a/2``.  It is written as a plain-text raster that any plotting tool
reads; with matplotlib installed a PNG is written next to it.

Run ``python3 demos/stress_map.py [out.txt]``.
"""

import math
import sys

import numpy as np

from casimir_fdfd.green_stress import read_raster, stress_map, write_raster
from casimir_fdfd.scenes import piston

path = sys.argv[1] if len(sys.argv) > 1 else "piston_stress_xy.txt"
dx, w = 1 / 16, 1.0
values = stress_map(piston(h=0.5), dx, 2 * math.pi * w, "TM", "xy")
write_raster(path, values, dx, w, "xy")
back, meta = read_raster(path)
print(f"wrote {path}: {back.shape[0]} x {back.shape[1]} nodes")
finite = np.isfinite(values)
i = np.unravel_index(np.nanargmax(np.abs(values)), values.shape)
print(f"largest |T_xy| = {abs(values[i]):.3e} at node {i}; {np.count_nonzero(~finite)} nodes masked near surfaces")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)
lim = np.nanmax(np.abs(values))
plt.imshow(values.T, origin="lower", cmap="RdBu", vmin=-lim, vmax=lim)
plt.colorbar(label="T_xy")
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
