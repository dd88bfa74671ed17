"""The frozen reference values agree with their independent derivations."""
import math

import numpy as np
import pytest

import oracles


@pytest.mark.parametrize("r", sorted(oracles.LENS_AREA_MC))
def test_frozen_mc_area_matches_closed_form(r):
    exact = oracles.circle_intersection_area(1.0, 1.0, r)
    assert oracles.LENS_AREA_MC[r] == pytest.approx(exact, rel=2e-3)


def test_mc_area_is_reproducible():
    assert oracles.lens_area_mc(0.5, n=10**6) == pytest.approx(oracles.LENS_AREA_MC[0.5], rel=5e-3)


def test_disc_moments_by_radial_integration():
    r = np.linspace(0, 1, 200001)
    for n in range(5):
        numeric = 2 * math.pi * np.trapezoid(r ** (2 * n + 1), r)
        assert numeric == pytest.approx(oracles.disc_moment(n), rel=1e-8)


def test_hankel_sigma_from_moment_ratios():
    m = oracles.disc_moment
    for n in range(10):
        # e_n = z^n / sqrt(m_n); conj(z) e_n = |z|^2 z^(n-1) / sqrt(m_n) projects onto z^(n-1)
        norm2 = m(n + 1) / m(n)
        proj2 = m(n) / m(n - 1) if n else 0.0
        assert norm2 - proj2 == pytest.approx(oracles.disc_hankel_sigma(n) ** 2, rel=1e-12)


def test_kernel_special_values():
    assert oracles.disc_kernel(0, 0) == pytest.approx(1 / math.pi)
    assert oracles.disc_kernel(0.5, 0.5) == pytest.approx(16 / (9 * math.pi))


def test_bidisc_multiplicity():
    s = oracles.bidisc_tensor_spectrum((8, 8))
    assert len(s) == 81
    assert np.count_nonzero(np.isclose(s, 1 / math.sqrt(2))) == 9
