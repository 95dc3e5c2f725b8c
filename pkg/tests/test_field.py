import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from solitonlab.field import (Grid, gradient, h1_distance, h1_norm, inner, integrate, interpolate, l2_norm,
                              laplacian, load_snapshot, save_snapshot, translate)


def sech(x):
    return 1.0 / np.cosh(x)


G1 = Grid((1024,), (20.0,))
# sech(30) ~ 2e-13: periodic wrap-around is below the spectral tolerances
G3 = Grid((2048,), (30.0,))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((100,), (8.0,))
    with pytest.raises(ValueError):
        Grid((8,), (8.0,))
    with pytest.raises(ValueError):
        Grid((16,), (-1.0,))
    with pytest.raises(ValueError):
        Grid((16,) * 4, (1.0,) * 4)
    g = Grid((32, 64), (1.0, 2.0))
    assert g.size == 32 * 64
    assert g.shape == (32, 64)
    np.testing.assert_allclose(g.dx, [2.0 / 32, 4.0 / 64])


def test_wavenumbers_have_single_zero_mode():
    g = Grid((64, 32), (3.0, 5.0))
    for k, n in zip(g.wavenumbers, g.n):
        assert len(k) == n
        assert np.count_nonzero(k == 0) == 1


def test_integrate_constant():
    g = Grid((256,), (8.0,))
    assert integrate(g, np.ones(g.shape)) == pytest.approx(16.0, abs=1e-12)


def test_integrate_sech2_against_quadrature():
    oracle = quad(lambda x: sech(x) ** 2, -20, 20, epsabs=1e-14)[0]
    assert oracle == pytest.approx(2.0, abs=1e-12)
    assert integrate(G1, sech(G1.axes[0]) ** 2) == pytest.approx(oracle, abs=1e-10)


def test_integrate_odd_is_zero():
    x = G1.axes[0]
    # x[0] = -L has no mirror partner, so the integrand must vanish there
    f = x * sech(x) ** 2
    assert abs(integrate(G1, f)) < 1e-12


def test_gradient_fourier_mode():
    g = Grid((128,), (np.pi,))
    k = 5.0
    f = np.exp(1j * k * g.axes[0])
    np.testing.assert_allclose(gradient(g, f)[0], 1j * k * f, atol=1e-11)
    np.testing.assert_allclose(laplacian(g, f), -k * k * f, atol=1e-10)


def test_gradient_constant_is_zero():
    g = Grid((64, 64), (2.0, 3.0))
    assert np.max(np.abs(gradient(g, np.full(g.shape, 3.5)))) < 1e-13


def test_gradient_and_laplacian_of_sech():
    x = G1.axes[0]
    inside = np.abs(x) <= 10
    d = gradient(G1, sech(x))[0]
    assert np.max(np.abs(d - (-sech(x) * np.tanh(x)))[inside]) < 1e-10
    x = G3.axes[0]
    lap = laplacian(G3, sech(x))
    assert np.max(np.abs(lap - (sech(x) - 2 * sech(x) ** 3))) < 1e-9


def test_gradient_of_real_field_is_real():
    assert np.isrealobj(gradient(G1, sech(G1.axes[0])))


def test_laplacian_commutes_with_gradient():
    g = Grid((64, 64), (6.0, 6.0))
    f = np.exp(-g.r2) * (1 + 0.3 * g.x[0])
    a = np.array([laplacian(g, c) for c in gradient(g, f)])
    b = gradient(g, laplacian(g, f))
    assert np.max(np.abs(a - b)) < 1e-10


def test_h1_distance_examples():
    f = sech(G1.axes[0])
    assert h1_distance(G1, f, f) == 0.0
    assert h1_distance(G1, f, np.zeros_like(f)) == pytest.approx(np.sqrt(2 + 2 / 3), abs=1e-8)
    g = sech(G1.axes[0] - 1.0)
    assert h1_distance(G1, f, g) == pytest.approx(h1_distance(G1, g, f), abs=1e-15)
    assert h1_norm(G1, f) == pytest.approx(np.sqrt(8 / 3), abs=1e-8)


def test_inner_is_conjugate_linear():
    x = G1.axes[0]
    f = sech(x) * np.exp(1j * x)
    g = sech(x - 1)
    assert inner(G1, 2j * f, g) == pytest.approx(-2j * inner(G1, f, g), abs=1e-13)
    assert inner(G1, f, f).real == pytest.approx(l2_norm(G1, f) ** 2, rel=1e-13)


def test_translate_and_interpolate():
    x = G3.axes[0]
    f = sech(x)
    np.testing.assert_allclose(translate(G3, f, [1.3]), sech(x - 1.3), atol=1e-10)
    x = G1.axes[0]
    f = sech(x)
    pts = np.linspace(-5, 5, 37) + 0.0123
    np.testing.assert_allclose(interpolate(G1, f, [pts]), sech(pts), atol=1e-10)
    # outside the box is zero
    assert interpolate(G1, f, [np.array([25.0])])[0] == 0.0


def test_interpolate_2d():
    g = Grid((64, 64), (8.0, 8.0))
    f = np.exp(-0.5 * g.r2)
    px, py = np.array([0.3, -1.1]), np.array([0.7, 2.05])
    out = interpolate(g, f, [px, py])
    np.testing.assert_allclose(out, np.exp(-0.5 * (px[:, None] ** 2 + py[None, :] ** 2)), atol=1e-10)


@pytest.mark.parametrize("dims,complex_", [(1, False), (2, True), (3, False), (1, True)])
def test_snapshot_round_trip(tmp_path, dims, complex_):
    g = Grid((16, 32, 16)[:dims], (1.0, 2.5, 3.0)[:dims])
    rng = np.random.default_rng(1)
    f = rng.standard_normal(g.shape)
    if complex_:
        f = f + 1j * rng.standard_normal(g.shape)
    p = tmp_path / "f.nsef"
    save_snapshot(p, g, f)
    g2, f2 = load_snapshot(p)
    assert g2 == g
    assert np.array_equal(f2, f)
    assert np.iscomplexobj(f2) == complex_


def test_snapshot_byte_layout(tmp_path):
    g = Grid((16,), (2.0,))
    f = np.arange(16.0)
    p = tmp_path / "f.nsef"
    save_snapshot(p, g, f)
    raw = p.read_bytes()
    assert raw.startswith(b"NSEF1")
    assert raw.endswith(f.astype("<f8").tobytes())
    assert np.frombuffer(raw[-16 * 8 - 8:-16 * 8], "<f8")[0] == 2.0


def test_snapshot_bad_magic(tmp_path):
    p = tmp_path / "bad.nsef"
    p.write_bytes(b"XXXXX" + bytes(40))
    with pytest.raises(ValueError):
        load_snapshot(p)


def test_check_rejects_nonfinite_and_bad_shape():
    g = Grid((16,), (1.0,))
    with pytest.raises(ValueError):
        g.check(np.zeros(17))
    f = np.zeros(16)
    f[3] = np.nan
    with pytest.raises(ValueError):
        g.check(f)


G2 = Grid((32, 16), (3.0, 2.0))
fields2 = arrays(np.complex128, G2.shape,
                 elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))


@settings(max_examples=30, deadline=None)
@given(fields2)
def test_parseval(f):
    phys = integrate(G2, np.abs(f) ** 2)
    spec = np.sum(np.abs(G2.fft(f)) ** 2) * np.prod(G2.dx) / G2.size
    assert phys == pytest.approx(spec, rel=1e-12, abs=1e-300)


@settings(max_examples=30, deadline=None)
@given(fields2)
def test_transform_round_trip(f):
    back = G2.ifft(G2.fft(f))
    assert np.linalg.norm(back - f) <= 1e-12 * max(np.linalg.norm(f), 1e-300)


@settings(max_examples=30, deadline=None)
@given(fields2, fields2, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(f, g, a, b):
    scale = 1 + np.abs(f).max() + np.abs(g).max()
    assert integrate(G2, a * f + b * g) == pytest.approx(a * integrate(G2, f) + b * integrate(G2, g),
                                                          abs=1e-10 * scale)
    lhs = gradient(G2, a * f + b * g)
    rhs = a * gradient(G2, f) + b * gradient(G2, g)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale
    lhs = laplacian(G2, a * f + b * g)
    rhs = a * laplacian(G2, f) + b * laplacian(G2, g)
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * scale
