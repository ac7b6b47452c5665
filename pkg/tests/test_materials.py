import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from casimir_fdfd.materials import (
    PERFECT_METAL,
    VACUUM,
    ConstantDielectric,
    Drude,
    d_w2eps_dw_angular,
    drude_gold_preset,
    epsilon_at_angular,
    epsilon_iw,
)

GOLD = Drude(7.2731, 0.028243)


def test_vacuum_is_one():
    assert epsilon_iw(VACUUM, 1.0) == 1.0


def test_constant_dielectric_is_frequency_independent():
    assert epsilon_iw(ConstantDielectric(4), 3.7) == 4.0


def test_drude_formula():
    for w in (0.01, 0.3, 1.0, 17.0):
        assert epsilon_iw(GOLD, w) == pytest.approx(1 + 7.2731**2 / (w * (w + 0.028243)), rel=1e-15)


def test_drude_large_w_limit():
    # eps - 1 decays like omega_p^2 / w^2
    w = np.array([1e3, 1e4, 1e5])
    excess = np.array([epsilon_iw(GOLD, x) - 1 for x in w])
    assert np.allclose(excess * w**2, 7.2731**2, rtol=1e-3)


def test_gold_preset():
    g = drude_gold_preset()
    assert g == Drude(7.2731, 0.028243)
    assert epsilon_iw(g, 1.0) == pytest.approx(52.445, abs=1e-3)
    assert epsilon_iw(g, 100.0) == pytest.approx(1.0053, abs=5e-5)


def test_perfect_metal_has_no_permittivity():
    with pytest.raises(ValueError, match="perfect metal has no bulk permittivity"):
        epsilon_iw(PERFECT_METAL, 1.0)


@pytest.mark.parametrize("w", [0.0, -1.0])
def test_nonpositive_frequency_rejected(w):
    with pytest.raises(ValueError):
        epsilon_iw(VACUUM, w)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        ConstantDielectric(0.5)
    with pytest.raises(ValueError):
        Drude(0.0, 0.1)
    with pytest.raises(ValueError):
        Drude(1.0, -0.1)


def test_lossless_plasma_allowed():
    assert epsilon_iw(Drude(2.0, 0.0), 1.0) == pytest.approx(5.0)


materials = st.sampled_from([VACUUM, ConstantDielectric(4.0), GOLD, Drude(1.0, 0.0), Drude(3.0, 2.0)])


@given(materials, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_monotone_decay_and_bounded_below(m, w1, w2):
    lo, hi = sorted((w1, w2))
    assert epsilon_iw(m, lo) >= epsilon_iw(m, hi) >= 1.0


@given(materials, st.floats(1e-2, 1e2))
def test_continuity(m, w):
    h = 1e-9 * w
    assert abs(epsilon_iw(m, w + h) - epsilon_iw(m, w)) <= 1e-5 * epsilon_iw(m, w)


def test_angular_conversion():
    assert epsilon_at_angular(GOLD, 2 * math.pi) == epsilon_iw(GOLD, 1.0)


@pytest.mark.parametrize("m", [VACUUM, ConstantDielectric(2.5), GOLD])
def test_derivative_matches_finite_difference(m):
    for xi in (0.3, 2.0, 9.0):
        h = 1e-5 * xi
        fd = ((xi + h) ** 2 * epsilon_at_angular(m, xi + h) - (xi - h) ** 2 * epsilon_at_angular(m, xi - h)) / (2 * h)
        assert d_w2eps_dw_angular(m, xi) == pytest.approx(fd, rel=1e-7)
