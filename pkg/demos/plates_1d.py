"""Three routes to the force between two perfect-metal points in 1D.

Two metal points a distance ``a`` apart sit on a ring of length ``L``.
On the grid the force follows from

1. the change of the zero-point energy sum over modes,
2. the imaginary-frequency integral of the energy density, and
3. the stress tensor on a contour around one point.

All three approach the ring value ``pi/24 (1/a^2 - 1/(L-a)^2)``; the
second term is the attraction through the periodic image.

Run ``python3 demos/plates_1d.py``.
"""

import math

from casimir_fdfd.force import compute_force
from casimir_fdfd.pedagogy_1d import energy_method_integrand, force_energy_difference, force_spectrum
from casimir_fdfd.quadrature import QuadratureSpec, integrate_w
from casimir_fdfd.reference_models import force_1d_analytic
from casimir_fdfd.scenes import parallel_plates_1d

a, L = 1.0, 5.0
ring = force_1d_analytic(a) - force_1d_analytic(L - a)
print(f"pi/24 = {force_1d_analytic(a):.6f}, ring value = {ring:.6f}\n")

print(f"{'dx':>7} {'eigenmode':>10} {'energy':>10} {'stress':>10}")
for dx in (0.1, 0.05, 0.025):
    eig = force_energy_difference(a, L, dx)
    energy = integrate_w(lambda w: energy_method_integrand(a, L, dx, w), QuadratureSpec(rel_tol=1e-8),
                         w_scale=2 * math.pi / a).value
    stress = compute_force(parallel_plates_1d(a, L), dx, ("TM",), QuadratureSpec(rel_tol=1e-6)).F[0]
    print(f"{dx:7.3f} {eig:10.6f} {energy:10.6f} {stress:10.6f}")

# The mode sum converges slowly: the running force oscillates with every
# added mode and only settles once the grid's highest modes are included.
spec = force_spectrum(a, L, 0.05)
print("\nrunning mode sum at dx = 0.05")
for frac in (0.1, 0.25, 0.5, 0.75, 1.0):
    i = max(int(frac * len(spec.partial)) - 1, 0)
    print(f"  modes up to omega = {spec.omega[i]:6.2f}: {spec.partial[i]: .5f}")

# The stress-tensor integrand is smooth and decays like exp(-2 xi a).
res = compute_force(parallel_plates_1d(a, L), 0.05, ("TM",), QuadratureSpec(rel_tol=1e-3))
print(f"\nstress integrand ({res.n_evals} samples of the adaptive rule)")
for w, v in list(zip(res.w_samples, res.integrand["TM"][:, 0]))[::8]:
    print(f"  xi = {w:8.3f}  {v: .3e}")
