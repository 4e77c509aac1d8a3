import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavegesture.geometry import MeasurementGrid, Medium, SoundSoft
from wavegesture.oracles import (
    MieSeries, fibonacci_sphere, low_frequency_constant, mie_far_field,
    point_plane_reconstruction, relative_l2, verify_point_plane,
)

unit = st.tuples(*[st.floats(-1, 1)] * 3).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1)


def test_soft_low_frequency_limit():
    # u_s -> -a / r, so w_inf -> -a, as k a -> 0
    for a in (0.5, 1.0, 2.0):
        s = MieSeries(1e-3 / a, a)
        w = s.far_field_cos(np.linspace(-1, 1, 5))
        np.testing.assert_allclose(w, -a, rtol=2e-3)


def test_penetrable_low_frequency_limit():
    # Born volume term k^2 m V / (4 pi) dominates for small k a
    k, a, n = 1e-2, 1.0, 1.5
    w = MieSeries(k, a, Medium(n)).far_field_cos(np.array([1.0]))[0]
    assert w.real == pytest.approx(k**2 * (n - 1) * a**3 / 3, rel=0.05)


@given(unit, unit)
def test_rotation_invariance(d, x):
    d, x = d / np.linalg.norm(d), x / np.linalg.norm(x)
    s = MieSeries(2 * np.pi)
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    a = mie_far_field(s, d, x[None])
    b = mie_far_field(s, q @ d, (q @ x)[None])
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)


@given(unit, unit)
def test_reciprocity(d, x):
    d, x = d / np.linalg.norm(d), x / np.linalg.norm(x)
    s = MieSeries(2 * np.pi, physics=Medium(4.0))
    np.testing.assert_allclose(mie_far_field(s, d, x[None]), mie_far_field(s, -x, -d[None]),
                               rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("physics", [SoundSoft(), Medium(4.0)])
def test_truncation_converged(physics):
    c = np.linspace(-1, 1, 41)
    base = MieSeries(2 * np.pi, physics=physics)
    lo = MieSeries(2 * np.pi, physics=physics, order=base.min_order).far_field_cos(c)
    hi = MieSeries(2 * np.pi, physics=physics, order=base.min_order + 20).far_field_cos(c)
    assert np.max(np.abs(lo - hi)) < 1e-10 * np.max(np.abs(hi))


def test_truncation_too_small():
    with pytest.raises(ValueError, match="truncation"):
        MieSeries(2 * np.pi, order=5)
    with pytest.raises(ValueError):
        MieSeries(2 * np.pi, radius=0.0)


def test_optical_theorem_soft():
    # sigma_total = (4 pi / k) Im w_inf(d) with this normalisation
    k = 2.0
    s = MieSeries(k)
    xh = fibonacci_sphere(4000)
    w = mie_far_field(s, np.array([0, 0, 1.0]), xh)
    sigma = 4 * np.pi * np.mean(np.abs(w) ** 2)
    forward = s.far_field_cos(np.array([1.0]))[0]
    assert sigma == pytest.approx(4 * np.pi / k * forward.imag, rel=1e-3)


def test_fibonacci_sphere():
    v = fibonacci_sphere(100)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)
    np.testing.assert_allclose(v.mean(axis=0), 0.0, atol=1e-2)


def test_relative_l2():
    assert relative_l2([1, 1], [1, 1]) == 0
    assert relative_l2([2, 0], [1, 0]) == pytest.approx(1.0)
    assert relative_l2([1, 2], [1, 1], weights=[1, 0]) == 0


class _BallSoft:
    """Point data for a tiny soft sphere from its low-frequency monopole."""

    def __init__(self, k, a):
        self.k, self.a = k, a

    def far_field(self, zhat, xhat):
        return np.full(len(xhat), -self.a + 0j)

    def point_field(self, z, points):
        rz = np.linalg.norm(z)
        r = np.linalg.norm(points - z, axis=1)
        # monopole strength from the exact spherical incident field at the centre
        return -self.a * np.exp(1j * self.k * rz) / (4 * np.pi * rz) * np.exp(1j * self.k * r) / r


def test_point_plane_exact_for_monopole():
    k = 2 * np.pi / 100
    grid = MeasurementGrid()
    solver = _BallSoft(k, 1e-3)
    rec = point_plane_reconstruction(k, [50.0, 0, 0], grid.flat_points, solver.far_field)
    np.testing.assert_allclose(rec, solver.point_field(np.array([50.0, 0, 0]), grid.flat_points))


class _Biased(_BallSoft):
    def far_field(self, zhat, xhat):
        return 1.01 * super().far_field(zhat, xhat)


def test_verify_point_plane_deterministic():
    # a 1% far-field bias gives a flat 1% mismatch at every distance
    solver = _Biased(0.1, 1e-3)
    zs = [[25.0, 0, 0], [50.0, 0, 0], [100.0, 0, 0]]
    a = verify_point_plane(solver, 0.1, zs)
    b = verify_point_plane(solver, 0.1, zs)
    assert a.to_text() == b.to_text()
    assert a.radii == [25.0, 50.0, 100.0]
    np.testing.assert_allclose(a.errors, 0.01, rtol=1e-8)
    assert abs(a.exponent) < 1e-6


def test_low_frequency_constant():
    est = low_frequency_constant(lambda zh, xh: np.full(len(xh), 2.0 + 1j))
    assert est.mean == pytest.approx(2 + 1j)
    assert est.relative_spread == 0
    s = MieSeries(0.05)
    est = low_frequency_constant(lambda zh, xh: mie_far_field(s, zh, xh))
    assert est.relative_spread < 0.01
