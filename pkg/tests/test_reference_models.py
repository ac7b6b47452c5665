import math

import numpy as np
import pytest
from scipy import integrate

from casimir_fdfd.materials import PERFECT_METAL, ConstantDielectric, epsilon_at_angular
from casimir_fdfd.quadrature import QuadratureSpec
from casimir_fdfd.reference_models import (
    force_1d_analytic,
    pfa_2d_squares,
    pfa_3d_blocks,
    pfa_cylinder_plate,
    pfa_slabs_2d,
    slab_pressure_2d,
)


def _plate_integrand(rho, a):
    # per-polarization perfect-metal plate integrand at |(w, k)| = rho
    x = math.exp(-2 * rho * a)
    return rho * x / (math.pi * -math.expm1(-2 * rho * a)) if rho > 0 else 1 / (2 * math.pi * a)


def _lifshitz_1d(a):
    return integrate.quad(lambda w: _plate_integrand(w, a), 0, np.inf, epsabs=0, epsrel=1e-12)[0]


def _lifshitz_2d(a):
    # int dw int dk / pi over the quarter plane, done in polar coordinates
    return integrate.quad(lambda r: 0.5 * r * _plate_integrand(r, a), 0, np.inf, epsabs=0, epsrel=1e-12)[0]


def _lifshitz_3d(a):
    # int dw int d^2k / (2 pi)^2 over the half space: a factor r^2 / (2 pi)
    return integrate.quad(lambda r: r * r / (2 * math.pi) * _plate_integrand(r, a), 0, np.inf,
                          epsabs=0, epsrel=1e-12)[0]


def test_force_1d():
    assert force_1d_analytic(1.0) == pytest.approx(0.1308996938995747, rel=1e-15)
    assert force_1d_analytic(2.0) == pytest.approx(force_1d_analytic(1.0) / 4, rel=1e-15)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_force_1d_matches_lifshitz_integral(a):
    assert force_1d_analytic(a) == pytest.approx(_lifshitz_1d(a), rel=1e-10)


def test_pfa_2d():
    assert pfa_2d_squares(1.0, 1.0) == pytest.approx(0.04783, abs=5e-6)
    assert pfa_2d_squares(2.0, 1.0) == pytest.approx(2 * pfa_2d_squares(1.0, 1.0), rel=1e-15)
    assert pfa_2d_squares(1.0, 2.0) == pytest.approx(pfa_2d_squares(1.0, 1.0) / 8, rel=1e-15)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_pfa_2d_is_plate_pressure_times_side(a):
    assert pfa_2d_squares(1.7, a) == pytest.approx(1.7 * _lifshitz_2d(a), rel=1e-10)


def test_pfa_3d():
    assert pfa_3d_blocks(1.0, 1.0) == pytest.approx(0.020562, abs=5e-7)
    assert pfa_3d_blocks(1.0, 2.0) == pytest.approx(pfa_3d_blocks(1.0, 1.0) / 16, rel=1e-15)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_pfa_3d_is_half_the_two_polarization_plate_pressure(a):
    assert pfa_3d_blocks(1.3, a) == pytest.approx(1.3 * _lifshitz_3d(a), rel=1e-10)
    assert pfa_3d_blocks(1.3, a) == pytest.approx(1.3 * (math.pi**2 / 240) / a**4 / 2, rel=1e-14)


@pytest.mark.parametrize("R,a", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)])
def test_pfa_cylinder_is_plate_pressure_summed_over_parabola(R, a):
    # strip sum of the per-polarization plate pressure over d(x) = a + x^2 / (2R)
    plate = lambda d: math.pi**2 / (480 * d**4)  # checked against the Lifshitz integral above
    strips = integrate.quad(lambda x: plate(a + x * x / (2 * R)), -np.inf, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert pfa_cylinder_plate(R, a) == pytest.approx(strips, rel=1e-10)


def test_pfa_cylinder_scaling():
    assert pfa_cylinder_plate(4.0, 1.0) == pytest.approx(2 * pfa_cylinder_plate(1.0, 1.0), rel=1e-14)
    assert pfa_cylinder_plate(1.0, 2.0) == pytest.approx(pfa_cylinder_plate(1.0, 1.0) / 2**3.5, rel=1e-14)


@pytest.mark.parametrize("f", [force_1d_analytic, lambda a: pfa_cylinder_plate(1.0, a), lambda a: pfa_2d_squares(1.0, a), lambda a: pfa_3d_blocks(a, 1.0)])
def test_reject_nonpositive(f):
    with pytest.raises(ValueError):
        f(0.0)


def test_metal_slab_pfa_shortcut():
    v = pfa_slabs_2d(PERFECT_METAL, 1.0, 1.0)
    assert v["TM"] == v["TE"] == v["mean"] == pfa_2d_squares(1.0, 1.0)


def lifshitz_slabs_2d(material, a, polarization, thickness):
    """Continuum per-polarization pressure between two slabs of finite thickness.

    Includes the opposite pull across the outer gap (of width ``thickness``)
    from the periodic image, to first order.
    """
    def refl(xi, k):
        kap = math.hypot(xi, k)
        e = epsilon_at_angular(material, xi)
        k1 = math.sqrt(e * xi * xi + k * k)
        # E_z (TM here) is the s wave of the planar problem, H_z the p wave
        r0 = (kap - k1) / (kap + k1) if polarization == "TM" else (e * kap - k1) / (e * kap + k1)
        x = math.exp(-2 * k1 * thickness)
        return kap, r0 * (1 - x) / (1 - r0 * r0 * x)

    def gap(d):
        def f(k, xi):
            kap, r = refl(xi, k)
            q = r * r * math.exp(-2 * kap * d)
            return kap * q / (1 - q)

        return integrate.dblquad(f, 0, np.inf, 0, np.inf, epsabs=1e-13, epsrel=1e-9)[0] / math.pi**2

    return gap(a) - gap(thickness)


def test_lifshitz_oracle_reduces_to_metal():
    # a huge permittivity makes the TM reflection -1 and the slabs opaque
    v = lifshitz_slabs_2d(ConstantDielectric(1e10), 1.0, "TM", 8.0)
    assert v == pytest.approx(_lifshitz_2d(1.0) - _lifshitz_2d(8.0), rel=1e-3)


@pytest.mark.parametrize("pol", ["TM", "TE"])
def test_dielectric_slab_pressure_vs_lifshitz(pol):
    m = ConstantDielectric(4.0)
    got = slab_pressure_2d(m, 1.0, pol, thickness=3.0, dx=1 / 20, quad=QuadratureSpec(rel_tol=1e-4))
    ref = lifshitz_slabs_2d(m, 1.0, pol, 3.0)
    assert got == pytest.approx(ref, rel=0.01)
