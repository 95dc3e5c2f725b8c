import numpy as np
import pytest

from solitonlab.field import Grid, integrate, l2_norm, translate
from solitonlab.ground_state import (MinimizeError, analytic_sech, energy, lagrange_multiplier, load_ground_state,
                                     minimize, rescale_to_physical, residual, save_ground_state, tail_check)
from solitonlab.observables import barycenter, internal_energy
from solitonlab.physics import ModelParams, Nonlinearity


def test_sech_oracle_values(sech_gs, cubic):
    g = sech_gs.grid
    assert l2_norm(g, sech_gs.profile) ** 2 == pytest.approx(2.0, abs=1e-10)
    assert energy(g, sech_gs.profile, cubic) == pytest.approx(-1 / 3, abs=1e-10)
    assert residual(g, sech_gs.profile, -0.5, cubic) < 1e-8


def test_minimize_cubic_sigma2_2(cubic_gs, sech_gs, cubic):
    g = cubic_gs.grid
    assert l2_norm(g, cubic_gs.profile - sech_gs.profile) < 1e-6
    assert cubic_gs.mu == pytest.approx(-0.5, abs=1e-4)
    assert cubic_gs.energy == pytest.approx(-1 / 3, abs=1e-4)
    assert l2_norm(g, cubic_gs.profile) == pytest.approx(np.sqrt(2.0), abs=1e-10)
    assert cubic_gs.residual < 1e-6
    assert cubic_gs.mu < 0 and cubic_gs.energy < 0
    # recomputing the multiplier moves it by less than tol_r
    assert abs(lagrange_multiplier(g, cubic_gs.profile, cubic) - cubic_gs.mu) < 1e-6


def test_minimize_cubic_sigma2_4(cubic, ground_grid):
    gs = minimize(cubic, ground_grid, 2.0)
    assert gs.profile.max() == pytest.approx(2.0, abs=1e-3)
    assert gs.mu == pytest.approx(-2.0, abs=1e-3)
    assert gs.energy == pytest.approx(-8 / 3, abs=1e-3)


def test_energy_descent(cubic_gs):
    hist = np.array(cubic_gs.energy_history)
    assert np.all(np.diff(hist) <= 1e-12)


def test_even_profile_and_centred(cubic_gs):
    U = cubic_gs.profile
    assert np.max(np.abs(U[1:] - U[1:][::-1])) < 1e-8
    assert abs(barycenter(cubic_gs.grid, U)[0]) < 1e-10


def test_sech_initialisation_is_fixed_point(cubic, sech_gs):
    gs = minimize(cubic, sech_gs.grid, np.sqrt(2.0), init=sech_gs.profile)
    assert gs.iterations <= 5
    assert gs.residual < 1e-6


def test_lagrange_multiplier_oracle(cubic, sech_gs):
    g = sech_gs.grid
    assert lagrange_multiplier(g, sech_gs.profile, cubic) == pytest.approx(-0.5, abs=1e-6)
    with pytest.raises(ValueError):
        lagrange_multiplier(g, 0 * sech_gs.profile, cubic)
    shifted = translate(g, sech_gs.profile, [1.7]).real
    assert lagrange_multiplier(g, shifted, cubic) == pytest.approx(lagrange_multiplier(g, sech_gs.profile, cubic),
                                                                  abs=1e-10)


def test_tail_check():
    g = Grid((1024,), (20.0,))
    x = g.axes[0]
    rep = tail_check(g, 1 / np.cosh(x))
    assert rep.passed
    assert rep.rate == pytest.approx(1.0, abs=0.01)
    assert tail_check(g, np.exp(-0.5 * x**2)).passed
    assert not tail_check(g, 1 / (1 + x**2)).passed


def test_no_bound_state_without_focusing(ground_grid):
    defocusing = Nonlinearity.custom(lambda s: 0.5 * s**4, lambda s: 2 * s**3, lambda s: 6 * s**2, q=4, p=4, nu=4)
    with pytest.raises(MinimizeError):
        minimize(defocusing, ground_grid, np.sqrt(2.0), max_iter=2000)


def test_sigma_must_be_positive(cubic, ground_grid):
    with pytest.raises(ValueError):
        minimize(cubic, ground_grid, 0.0)


def test_rescale_identity_at_h1(sech_gs):
    out = rescale_to_physical(sech_gs, ModelParams(1.0, 1.0, np.sqrt(2.0)), sech_gs.grid)
    np.testing.assert_allclose(out, sech_gs.profile, atol=1e-13)


@pytest.mark.parametrize("h", [1.0, 0.5, 0.25, 0.125])
def test_rescale_identities(cubic_gs, cubic, h):
    params = ModelParams(h, 1.0, np.sqrt(2.0))
    g = Grid((8192,), (8.0,))
    u = rescale_to_physical(cubic_gs, params, g)
    assert integrate(g, u**2) / cubic_gs.sigma**2 == pytest.approx(h**1.5, rel=1e-6)
    assert internal_energy(g, u, params, cubic) / cubic_gs.energy == pytest.approx(h**0.5, rel=1e-6)


def test_save_load_round_trip(tmp_path, cubic_gs):
    save_ground_state(tmp_path / "gs", cubic_gs)
    assert (tmp_path / "gs.nsef").exists() and (tmp_path / "gs.json").exists()
    back = load_ground_state(tmp_path / "gs")
    assert np.array_equal(back.profile, cubic_gs.profile)
    assert (back.mu, back.energy, back.sigma) == (cubic_gs.mu, cubic_gs.energy, cubic_gs.sigma)
    assert back.grid == cubic_gs.grid


def test_analytic_sech_is_one_dimensional():
    with pytest.raises(ValueError):
        analytic_sech(Grid((16, 16), (1.0, 1.0)), 1.0)


def test_two_dimensional_minimiser_is_radial():
    # subcritical power W = -(2/3) s^3 in 2D: a bound state exists at any charge
    g = Grid((64, 64), (12.0, 12.0))
    gs = minimize(Nonlinearity.focusing_power(2.0, 3.0), g, 3.0, tol=1e-7)
    U = gs.profile
    assert gs.energy < 0 and gs.mu < 0
    np.testing.assert_allclose(U, U.T, atol=1e-8)
    np.testing.assert_allclose(U[1:, :], U[1:, :][::-1, :], atol=1e-8)
