import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.special import jv

from axiflow.errors import ConfigError, NegativeRadius, OutOfDomain, ThirdOrderUnavailable
from axiflow.field_core import (Constant, FunctionField, GridData, Gridded, Poiseuille, Ramp,
                                RigidHelixFlow, ShearFlow, Sinusoid, SpikeTrain, StagnationSwirl,
                                StraightTube, Womersley, acceleration, describe, divergence,
                                evaluate, jet, list_fixtures, load_grid, make_fixture,
                                pressure_compatibility, save_grid)
from axiflow.field_core.derivatives import fornberg_weights

r_, z_, t_ = sp.symbols("r z t", real=True)


def sympy_swirl(alpha=1, omega0=1):
    return (-alpha * r_ / 2, omega0 * sp.exp(alpha * t_) * r_, alpha * z_)


@pytest.mark.parametrize("order", [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0),
                                   (1, 1, 0), (0, 0, 2), (1, 0, 2), (3, 0, 0)])
def test_stagnation_partials_match_symbolic(order):
    f = StagnationSwirl(alpha=1.0, omega0=1.0)
    comps = sympy_swirl()
    pt = {r_: 0.4, z_: 1.3, t_: 0.2}
    want = [float(sp.diff(c, r_, order[0], z_, order[1], t_, order[2]).subs(pt)) for c in comps]
    np.testing.assert_allclose(f.partial(0.4, 1.3, 0.2, order), want, rtol=1e-13, atol=1e-14)


def test_stagnation_example_value():
    v = evaluate(StagnationSwirl(alpha=1.0, omega0=1.0), 0.5, 1.0, 0.0)
    assert v == pytest.approx((-0.25, 0.5, 1.0))


def test_negative_radius_and_domain_errors():
    with pytest.raises(NegativeRadius):
        evaluate(Poiseuille(), -0.1, 0.0, 0.0)
    with pytest.raises(OutOfDomain):
        evaluate(Poiseuille(), 1.5, 0.0, 0.0)


def test_helix_acceleration_is_centripetal():
    a = acceleration(RigidHelixFlow(omega=2.0, W=1.0), 0.5, 0.0, 0.0)
    assert tuple(a) == pytest.approx((-2.0, 0.0, 0.0))


@pytest.mark.parametrize("fld", [StagnationSwirl(), RigidHelixFlow(), Poiseuille(),
                                 StraightTube(g=Sinusoid(3.0)), ShearFlow(), Womersley()])
@pytest.mark.parametrize("r", [0.0, 0.3, 0.7])
def test_divergence_free(fld, r):
    assert abs(divergence(fld, r, 0.5, 0.1)) < 1e-12


@pytest.mark.parametrize("fld", [StagnationSwirl(), RigidHelixFlow(), StraightTube(g=Ramp()),
                                 ShearFlow()])
def test_euler_fixtures_have_gradient_acceleration(fld):
    for r in (0.0, 0.2, 0.6):
        pc = pressure_compatibility(fld, r, 1.1, 0.3)
        assert abs(pc["a_theta"]) < 1e-12
        assert abs(pc["curl_mismatch"]) < 1e-12


def test_womersley_flagged_non_euler():
    pc = pressure_compatibility(Womersley(N=4.0), 0.5, 0.0, 0.0)
    assert abs(pc["curl_mismatch"]) > 1e-3


def womersley_oracle(r, t, p_o=1.0, N=4.0, nu=1.0, R=1.0):
    k = np.exp(0.75j * np.pi) * np.sqrt(N / nu)
    return (p_o / (1j * N) * (1 - jv(0, k * r) / jv(0, k * R)) * np.exp(1j * N * t)).real


@pytest.mark.parametrize("r", [0.0, 0.25, 0.5, 0.9])
@pytest.mark.parametrize("t", [0.0, 0.4, 1.1])
def test_womersley_matches_scipy_bessel(r, t):
    assert Womersley().value(r, 0.0, t)[2] == pytest.approx(womersley_oracle(r, t), abs=1e-13)


@pytest.mark.parametrize("r", [0.1, 0.4, 0.8])
def test_womersley_momentum_balance(r):
    w = Womersley(p_o=1.0, N=4.0, nu=1.0)
    t = 0.37
    lhs = (w.partial(r, 0, t, (0, 0, 1))[2]
           - (w.partial(r, 0, t, (2, 0, 0))[2] + w.partial(r, 0, t, (1, 0, 0))[2] / r))
    assert lhs == pytest.approx(math.cos(4.0 * t), abs=1e-6)


def test_womersley_no_slip_and_poiseuille_limit():
    assert abs(Womersley().value(1.0, 0, 0.3)[2]) < 1e-14
    w = Womersley(p_o=1.0, N=1e-6, nu=1.0)
    p = Poiseuille(p_s=1.0, nu=1.0, ell=1.0)
    for r in np.linspace(0, 1, 11):
        assert w.value(r, 0, 0.0)[2] == pytest.approx(p.value(r, 0, 0)[2], abs=1e-4)


def test_womersley_number_and_range():
    assert Womersley(N=4.0, nu=1.0, radius=1.0).womersley_number == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Womersley(N=1e4)


def test_poiseuille_profile():
    assert Poiseuille().value(0.0, 0, 0)[2] == pytest.approx(1.0)
    assert Poiseuille().value(1.0, 0, 0)[2] == 0.0


def test_spike_train_requires_increasing_times():
    with pytest.raises(ValueError):
        SpikeTrain(times=(1.0, 0.5))


@given(st.floats(-2, 2), st.integers(0, 2))
def test_waveform_derivatives_match_finite_differences(t, n):
    for g in (Sinusoid(3.0), Ramp(), SpikeTrain(times=(0.0, 1.0))):
        h = 1e-4
        f = [g.derivative(t + k * h, n) for k in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        assert g.derivative(t, n + 1) == pytest.approx(fd, rel=1e-7, abs=1e-7)


def test_fornberg_weights_central():
    np.testing.assert_allclose(fornberg_weights(0.0, [-2, -1, 0, 1, 2], 1),
                               np.array([1, -8, 0, 8, -1]) / 12, atol=1e-15)


def test_function_field_parity_and_fd():
    ff = FunctionField(v_theta=lambda r, z, t: r * z, v_z=lambda r, z, t: 1.0 + z)
    assert ff.value(-0.2, 1.0, 0)[1] == pytest.approx(-0.2)
    assert ff.partial(0.0, 1.0, 0, (1, 1, 0))[1] == pytest.approx(1.0, rel=1e-6)


def test_grid_round_trip_and_spline(tmp_path):
    f = StagnationSwirl(alpha=1.0, omega0=0.5)
    grid = GridData.from_function(lambda r, z, t: f.value(r, z, t), np.linspace(0, 1, 9),
                                  np.linspace(1, 2, 9), np.linspace(0, 0.5, 5))
    path = tmp_path / "g.txt"
    save_grid(grid, path)
    g2 = load_grid(path)
    np.testing.assert_array_equal(g2.values, grid.values)
    gf = Gridded(g2)
    np.testing.assert_allclose(gf.value(0.33, 1.41, 0.27), f.value(0.33, 1.41, 0.27), rtol=1e-4)
    with pytest.raises(ThirdOrderUnavailable):
        jet(gf, 0.3, 1.5, 0.2, want_third=True)


def test_grid_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("r z t vr vt vz\n")
    with pytest.raises(ConfigError):
        load_grid(p)
    with pytest.raises(ConfigError):
        GridData(np.array([0, 1, 2]), np.arange(4.0), np.arange(4.0), np.zeros((3, 4, 4, 3)))


def test_grid_axis_parity_enforced():
    vals = np.ones((4, 4, 4, 3))
    with pytest.raises(ConfigError):
        GridData(np.arange(4.0), np.arange(4.0), np.arange(4.0), vals)


def test_registry():
    assert len(list_fixtures()) == 7
    assert "2" in describe(make_fixture({"kind": "Womersley", "N": 4, "nu": 1}))
    assert "Poiseuille" in describe("Poiseuille")
    with pytest.raises(ConfigError):
        make_fixture({"kind": "Nope"})
