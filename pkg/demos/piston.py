"""Lateral force between two metal squares sliding between two metal walls.

Squares of side ``s = a`` a gap ``a`` apart sit between walls a distance
``h`` above and below.  The wall distance changes the TM and TE parts in
opposite directions: TM grows with ``h`` and TE shrinks.  On this grid the
sum has its minimum near ``h = a/4`` and grows over the sweep.  The same
frequency samples also give the force per unit length of the z-invariant
3D version (weight ``xi/2``).

Run ``python3 demos/piston.py [N]``; the default ``N = 16`` (dx = a/N) takes a
few minutes, ``a/32`` several times longer.
"""

import sys

from casimir_fdfd.force import compute_force_modes
from casimir_fdfd.quadrature import QuadratureSpec
from casimir_fdfd.reference_models import pfa_2d_squares, pfa_3d_blocks
from casimir_fdfd.scenes import piston

dx = 1 / float(sys.argv[1]) if len(sys.argv) > 1 else 1 / 16
print(f"dx = a/{1 / dx:g}")
print(f"{'h':>5} {'F_TM':>10} {'F_TE':>10} {'F_2D/PFA':>9} {'F_3D/PFA':>9}")
for h in (0.5, 1.0, 2.0):
    scene = piston(h=h)
    res = compute_force_modes(scene, dx, quad=QuadratureSpec(rel_tol=1e-3), modes=("2d", "zinv3d"))
    f2, f3 = res["2d"], res["zinv3d"]
    print(f"{h:5.2f} {f2.parts['TM'][0]:10.6f} {f2.parts['TE'][0]:10.6f} "
          f"{f2.F[0] / pfa_2d_squares(1, 1):9.4f} {f3.F[0] / pfa_3d_blocks(1, 1):9.4f}")
