import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitonlab.field import Grid, integrate
from solitonlab.ground_state import rescale_to_physical
from solitonlab.observables import barycenter_velocity
from solitonlab.physics import (ModelParams, Nonlinearity, Potential, ResolutionError, check_admissible,
                                make_initial_data, validate_nonlinearity, validate_potential)

PHYS = Grid((2048,), (16.0,))


def test_cubic_values(cubic):
    assert cubic.prime(np.array([1.0]))[0] == -2.0
    assert cubic.value(np.array([1.0]))[0] == -0.5
    assert cubic.prime_over_s(np.array([0.0]))[0] == 0.0
    assert cubic.second(np.array([0.0]))[0] == 0.0


def test_negative_argument_rejected(cubic):
    for fn in (cubic.value, cubic.prime, cubic.second, cubic.prime_over_s):
        with pytest.raises(ValueError):
            fn(np.array([-1.0]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 5), st.floats(2.1, 8), st.floats(1e-6, 50))
def test_power_formulas(c, p, s):
    nl = Nonlinearity.focusing_power(c, p)
    s = np.array([s])
    assert nl.prime(s)[0] == pytest.approx(-c * s[0] ** (p - 1), rel=1e-13)
    assert nl.prime_over_s(s)[0] == pytest.approx(-c * s[0] ** (p - 2), rel=1e-13)
    assert nl.prime_over_s(s)[0] == pytest.approx(nl.prime(s)[0] / s[0], rel=1e-13)
    assert nl.value(s)[0] == pytest.approx(-(c / p) * s[0] ** p, rel=1e-13)


def test_nonlinearity_round_trip():
    nl = Nonlinearity.focusing_power(1.5, 3.0)
    assert Nonlinearity.from_dict(nl.to_dict()) == nl
    with pytest.raises(ValueError):
        Nonlinearity.focusing_power(-1.0, 4.0)
    with pytest.raises(ValueError):
        Nonlinearity.focusing_power(1.0, 2.0)


def test_validate_cubic_all_pass(cubic):
    rep = validate_nonlinearity(cubic, dims=1)
    assert rep.passed, rep.lines()
    assert [c.name for c in rep.checks] == ["W", "Wp", "W0", "W1"]
    # |W''| = 6 s^2 and q = p = 4, so the fitted constants share c1 + c2 = 6
    assert rep["Wp"].values["c1"] + rep["Wp"].values["c2"] == pytest.approx(6.0, rel=1e-6)


def test_validate_positive_w_fails_w1():
    nl = Nonlinearity.custom(lambda s: s**4, lambda s: 4 * s**3, lambda s: 12 * s**2, q=4, p=4, nu=4)
    rep = validate_nonlinearity(nl)
    assert not rep["W1"].passed
    assert rep["W"].passed


def test_validate_nu_too_large_fails_w0():
    nl = Nonlinearity.custom(lambda s: -s**8 / 8, lambda s: -s**7, lambda s: -7 * s**6, q=8, p=8, nu=8)
    rep = validate_nonlinearity(nl, dims=1)
    assert not rep["W0"].passed
    assert "nu=8" in rep["W0"].detail


def test_validate_w_fails_for_quadratic_term():
    nl = Nonlinearity.custom(lambda s: -s**2, lambda s: -2 * s, lambda s: -2 + 0 * s, q=3, p=3, nu=3)
    assert not validate_nonlinearity(nl)["W"].passed


def test_cubic_in_3d_is_mass_supercritical(cubic):
    # 2 + 4/3 < 4: the lower bound (W0) fails in three dimensions
    assert not validate_nonlinearity(cubic, dims=3)["W0"].passed


def test_validate_harmonic_pass():
    rep = validate_potential(Potential.harmonic(1.0), Grid((256,), (8.0,)))
    assert rep.passed, rep.lines()


def test_validate_quartic_pass():
    assert validate_potential(Potential.quartic(0.1), Grid((256,), (16.0,))).passed


def test_validate_zero_potential_flagged():
    rep = validate_potential(Potential.zero(), Grid((256,), (8.0,)))
    assert rep["V0"].passed
    assert not rep["Vinf1"].passed
    assert "V=0 runs valid only for V-free experiments" in rep["Vinf1"].detail


def test_validate_linear_potential_fails():
    pot = Potential.custom(lambda x: np.sqrt(np.sum(x**2, axis=0)),
                           lambda x: x / np.maximum(np.sqrt(np.sum(x**2, axis=0)), 1e-300), a=1.0, b=0.5, R1=2.0)
    rep = validate_potential(pot, Grid((256,), (8.0,)))
    assert not rep["Vinf1"].passed


def test_validate_negative_potential_fails_v0():
    pot = Potential.custom(lambda x: -np.sum(x**2, axis=0), lambda x: -2 * x, a=2, b=0.8, R1=2)
    assert not validate_potential(pot, Grid((64,), (4.0,)))["V0"].passed


def test_potential_gradients_match_finite_differences():
    x = np.array([[0.3, -1.7, 2.2]])
    for pot in (Potential.harmonic(1.3), Potential.quartic(0.1)):
        eps = 1e-6
        fd = (pot.value(x + eps) - pot.value(x - eps)) / (2 * eps)
        np.testing.assert_allclose(pot.grad(x)[0], fd, rtol=1e-7)


def test_potential_round_trip():
    for pot in (Potential.zero(), Potential.harmonic(2.0), Potential.quartic(0.3)):
        assert Potential.from_dict(pot.to_dict()) == pot


def test_model_params():
    p = ModelParams(0.25, 1.0, np.sqrt(2.0))
    assert p.beta == 1.5
    assert p.width() == pytest.approx(0.125)
    assert p.charge(1) == pytest.approx(0.25)
    assert p.energy_scale(1) == pytest.approx(0.5)
    for bad in [(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, -1.0)]:
        with pytest.raises(ValueError):
            ModelParams(*bad)


def test_initial_data_h1_is_real_even(sech_gs):
    params = ModelParams(1.0, 1.0, np.sqrt(2.0))
    g = Grid((1024,), (20.0,))
    psi = make_initial_data(params, sech_gs, [0.0], [0.0], g)
    assert np.max(np.abs(psi.imag)) == 0.0
    # x_i <-> x_{n-i} is the reflection on the periodic grid
    assert np.max(np.abs(psi.real[1:] - psi.real[1:][::-1])) < 1e-12
    assert integrate(g, np.abs(psi) ** 2) == pytest.approx(2.0, abs=1e-10)


def test_initial_data_charge_quarter(sech_gs):
    params = ModelParams(0.25, 1.0, np.sqrt(2.0))
    psi = make_initial_data(params, sech_gs, [0.0], [0.0], PHYS)
    assert integrate(PHYS, np.abs(psi) ** 2) == pytest.approx(0.25, abs=1e-10)


@pytest.mark.parametrize("h", [1.0, 0.5, 0.25, 0.125])
def test_initial_data_charge_scaling(cubic_gs, h):
    params = ModelParams(h, 1.0, np.sqrt(2.0))
    g = Grid((8192,), (16.0,))
    psi = make_initial_data(params, cubic_gs, [0.5], [0.3], g)
    assert integrate(g, np.abs(psi) ** 2) / params.charge(1) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("h", [1.0, 0.5])
def test_initial_velocity(sech_gs, h):
    params = ModelParams(h, 1.0, np.sqrt(2.0))
    psi = make_initial_data(params, sech_gs, [0.0], [1.0], PHYS)
    assert barycenter_velocity(PHYS, psi, h)[0] == pytest.approx(1.0, abs=1e-8)


def test_initial_data_resolution_errors(sech_gs):
    params = ModelParams(0.125, 1.0, np.sqrt(2.0))
    with pytest.raises(ResolutionError, match="resolve"):
        make_initial_data(params, sech_gs, [0.0], [0.0], Grid((256,), (16.0,)))
    with pytest.raises(ResolutionError, match="edge"):
        make_initial_data(ModelParams(1.0, 1.0, np.sqrt(2.0)), sech_gs, [14.0], [0.0], PHYS)


def _admissible(gs, h, q0, v, K, pot):
    params = ModelParams(h, 1.0, np.sqrt(2.0))
    psi = make_initial_data(params, gs, [q0], [v], PHYS)
    return check_admissible(psi, PHYS, params, Nonlinearity.focusing_power(), pot, K, gs.energy, [v])


def test_admissible_ground_state(sech_gs):
    rep = _admissible(sech_gs, 0.5, 0.0, 0.0, 10.0, Potential.harmonic(1.0))
    assert rep.passed, rep.to_dict()


def test_admissible_fails_on_speed(sech_gs):
    rep = _admissible(sech_gs, 0.5, 0.0, 11.0, 10.0, Potential.harmonic(1.0))
    assert rep.failing() == ["phase_gradient"]


def test_admissible_fails_on_moment(sech_gs):
    # int V u^2 = 72 * 2^(-1/2) ~ 50.9 against the bound 10 * 2^(1/2) ~ 14.1
    rep = _admissible(sech_gs, 0.5, 12.0, 0.0, 10.0, Potential.harmonic(1.0))
    assert rep.failing() == ["potential_moment"]
    assert rep["potential_moment"].values["value"] == pytest.approx(72 * 0.5**1.5 * 2, rel=1e-3)


def test_admissible_fails_on_charge(sech_gs):
    params = ModelParams(0.5, 1.0, np.sqrt(2.0))
    psi = 1.01 * make_initial_data(params, sech_gs, [0.0], [0.0], PHYS)
    rep = check_admissible(psi, PHYS, params, Nonlinearity.focusing_power(), Potential.zero(), 10.0,
                           sech_gs.energy, [0.0])
    assert "charge" in rep.failing()


def test_rescaled_profile_matches_initial_data(sech_gs):
    params = ModelParams(0.5, 1.0, np.sqrt(2.0))
    psi = make_initial_data(params, sech_gs, [0.0], [0.0], PHYS)
    np.testing.assert_allclose(psi.real, rescale_to_physical(sech_gs, params, PHYS), atol=1e-14)
