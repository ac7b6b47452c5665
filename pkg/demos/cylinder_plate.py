"""A metal cylinder above a metal plate, compared with the proximity-force estimate.

The cylinder (radius ``R``) and plate are z-invariant, so the 3D force per
unit length follows from 2D integrands with the weight ``xi/2``.  Each
polarization is compared with its share of the PFA force.  Both ratios
should tend to 1 as ``a/R`` shrinks; at coarse dx the curved surface is
staircased and the ratios carry errors of 10% or more.

Run ``python3 demos/cylinder_plate.py [N]``; the default ``N = 8`` (dx = a/N) is a
coarse preview.
"""

import sys

from casimir_fdfd.force import compute_force
from casimir_fdfd.quadrature import QuadratureSpec
from casimir_fdfd.reference_models import pfa_cylinder_plate
from casimir_fdfd.scenes import cylinder_plate

dx = 1 / float(sys.argv[1]) if len(sys.argv) > 1 else 1 / 8
print(f"dx = a/{1 / dx:g}")
print(f"{'a/R':>5} {'TM/PFA':>8} {'TE/PFA':>8}")
for R in (2.0, 1.0, 0.5):
    res = compute_force(cylinder_plate(R), dx, quad=QuadratureSpec(rel_tol=1e-3, mode="zinv3d"))
    pfa = pfa_cylinder_plate(R, 1.0)
    print(f"{1 / R:5.2f} {res.parts['TM'][0] / pfa:8.4f} {res.parts['TE'][0] / pfa:8.4f}")
