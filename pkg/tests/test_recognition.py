import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavegesture.geometry import FieldSamples, SamplingRegion
from wavegesture.recognition import (
    classify, correlation, indicator_location, indicator_shape, locate, test_function_u_ring,
    trapezoid_inner,
)
from wavegesture.tables import AngleMesh, FarFieldTable, test_function_u_hat

K1 = 2 * np.pi / 100
K2 = 2 * np.pi
Z0 = np.array([50.0, 3.0, -2.0])


def _table(values, sid=1):
    inc, obs = AngleMesh.cap("+x", 25.0, 5), AngleMesh.cap("-x", 25.0, 5)
    return FarFieldTable(sid, K2, inc, obs, np.asarray(values, complex))


@pytest.fixture(scope="module")
def random_tables():
    rng = np.random.default_rng(7)
    return [_table(rng.normal(size=(5,) * 4) + 1j * rng.normal(size=(5,) * 4) + 3, sid=i + 1)
            for i in range(3)]


@pytest.fixture(scope="module")
def point_data(grid):
    return FieldSamples(grid, test_function_u_ring(K1, Z0, grid.flat_points))


def test_trapezoid_area(grid):
    ones = FieldSamples(grid, np.ones((32, 32)))
    assert trapezoid_inner(ones, ones) == pytest.approx(400.0)


def test_trapezoid_linear_and_hermitian(grid, rng):
    a = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    b = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    fa, fb = FieldSamples(grid, a), FieldSamples(grid, b)
    ab = trapezoid_inner(fa, fb)
    assert trapezoid_inner(fb, fa) == pytest.approx(np.conj(ab))
    assert trapezoid_inner(FieldSamples(grid, (2 - 1j) * a), fb) == pytest.approx((2 - 1j) * ab)


def test_trapezoid_exact_for_bilinear(grid):
    p = grid.points
    f = FieldSamples(grid, p[..., 1] * p[..., 2] + 1)
    assert trapezoid_inner(f, FieldSamples(grid, np.ones((32, 32)))) == pytest.approx(400.0)


def test_u_ring_example():
    # |z| = |x - z| = 50 and k |z| + k |x - z| = 2 pi
    assert test_function_u_ring(K1, [50.0, 0, 0], np.zeros(3)) == pytest.approx(
        1 / (1e4 * np.pi), rel=1e-12)
    with pytest.raises(ValueError):
        test_function_u_ring(K1, np.zeros(3), np.ones(3))


def test_correlation_rejects_zero(grid):
    w = grid.weights
    with pytest.raises(ValueError, match="measured"):
        correlation(np.zeros((32, 32)), np.ones((32, 32)), w, False)
    with pytest.raises(ValueError, match="test"):
        correlation(np.ones((32, 32)), np.zeros((32, 32)), w, False)


coord = st.floats(-40, 40)


@given(st.floats(5, 95), coord, coord,
       st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False))
def test_location_indicator_invariants(point_data, x, y, z, c):
    v = indicator_location(point_data, K1, [x, y, z])
    assert -1e-12 <= v <= 1 + 1e-12
    scaled = FieldSamples(point_data.grid, c * point_data.values)
    assert indicator_location(scaled, K1, [x, y, z]) == pytest.approx(v, abs=1e-12)


def test_location_indicator_peak(point_data):
    assert indicator_location(point_data, K1, Z0) == pytest.approx(1.0, abs=1e-12)
    assert indicator_location(point_data.magnitude(), K1, Z0) == pytest.approx(1.0, abs=1e-12)
    # monotone decay away from the source
    vals = [indicator_location(point_data, K1, Z0 + [0, s, 0]) for s in range(0, 10, 2)]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("phaseless", [False, True])
def test_locate_synthetic(point_data, phaseless):
    data = point_data.magnitude() if phaseless else point_data
    res = locate(data, K1)
    assert res.error(Z0) < 1e-3
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert res.evaluations <= 500


def test_locate_rejects_outside_start(point_data):
    with pytest.raises(ValueError, match="outside"):
        locate(point_data, K1, initial=(-5.0, 0, 0))


def test_locate_stays_in_region(point_data):
    region = SamplingRegion((0, -10, -10), (30, 10, 10))
    res = locate(point_data, K1, region=region)
    assert np.all(res.z >= region.lo) and np.all(res.z <= region.hi)


def _table_data(grid, table, z):
    return FieldSamples(grid, test_function_u_hat(table, K2, z, grid.flat_points))


def test_shape_self_match(grid, random_tables):
    z = [50.0, 0.0, 0.0]
    data = _table_data(grid, random_tables[1], z)
    scores = classify(data, random_tables, K2, z)
    assert scores.best == 1
    assert scores.values[1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(scores.values <= 1 + 1e-12) and scores.margin > 0
    assert scores.ranking[0] == 1


def test_shape_scale_invariance(grid, random_tables):
    z = [50.0, 0.0, 0.0]
    data = _table_data(grid, random_tables[0], z)
    scaled = FieldSamples(grid, (0.3 + 2j) * data.values)
    a = classify(data, random_tables, K2, z).values
    b = classify(scaled, random_tables, K2, z).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_single_table(grid, random_tables):
    data = _table_data(grid, random_tables[0], [50.0, 0, 0])
    scores = classify(data, random_tables[:1], K2, [50.0, 0, 0])
    assert scores.best == 0 and scores.margin == float("inf")


def test_tie_goes_to_first(grid, random_tables):
    t = random_tables[2]
    data = _table_data(grid, t, [50.0, 0, 0])
    scores = classify(data, [random_tables[0], t, t], K2, [50.0, 0, 0])
    assert scores.best == 1 and scores.margin == 0


def test_wavenumber_mismatch(grid, random_tables):
    data = _table_data(grid, random_tables[0], [50.0, 0, 0])
    with pytest.raises(ValueError, match="kappa"):
        indicator_shape(data, random_tables[0], np.pi, [50.0, 0, 0])
    with pytest.raises(ValueError):
        classify(data, [], K2, [50.0, 0, 0])


def test_noise_degrades_score(grid, random_tables):
    z = [50.0, 0.0, 0.0]
    clean = _table_data(grid, random_tables[0], z)
    rng = np.random.default_rng(3)
    rho = rng.uniform(-1, 1, clean.values.shape)
    vals = []
    for level in (0.0, 0.05, 0.2, 0.5):
        noisy = FieldSamples(grid, clean.values * (1 + level * rho))
        vals.append(indicator_shape(noisy, random_tables[0], K2, z))
    assert np.all(np.diff(vals) < 0)
