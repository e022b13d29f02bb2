import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from axiflow.errors import DegenerateTube, OutsideTubeRange, SeedSpacingTooCoarse
from axiflow.field_core import (FunctionField, Poiseuille, RigidHelixFlow, ShearFlow,
                                StagnationSwirl, StraightTube, Sinusoid)
from axiflow.field_core.types import Domain
from axiflow.lagrange import integrate_trajectory
from axiflow.reconstruct import (STREAMTUBE_COLUMNS, SyntheticTubeMap, build_streamtube_map,
                                 clustered_nodes, deformation_2d, inflow_propagation, inlet_trace,
                                 invert_streamtube, reconstruct_velocity, vtheta_gronwall,
                                 write_streamtube)


@pytest.fixture(scope="module")
def swirl_tube():
    return build_streamtube_map(StagnationSwirl(omega0=0.0), clustered_nodes(1.0), (1.0, 3.0), [0.0])


@pytest.fixture(scope="module")
def pipe_tube():
    return build_streamtube_map(Poiseuille(), clustered_nodes(0.9), (0.0, 2.0), [0.0])


def test_clustered_nodes():
    nodes = clustered_nodes(1.0, n=5)
    assert nodes == pytest.approx([0.0, 1 / 16, 1 / 4, 9 / 16, 1.0])


def test_swirl_tube_closed_form(swirl_tube):
    for a in (0.0, 0.1, 0.37, 0.8):
        for z in (1.0, 1.5, 2.0, 2.9):
            assert swirl_tube.R(a, z, 0.0) == pytest.approx(a / math.sqrt(z), abs=1e-10)
            assert swirl_tube.partial(a, z, 0.0, 1) == pytest.approx(z**-0.5, rel=1e-9)
            assert swirl_tube.partial(a, z, 0.0, 0, 1) == pytest.approx(-0.5 * a * z**-1.5, abs=1e-9)
            assert swirl_tube.partial(a, z, 0.0, 0, 2) == pytest.approx(0.75 * a * z**-2.5, abs=1e-8)
            assert swirl_tube.partial(a, z, 0.0, 1, 1) == pytest.approx(-0.5 * z**-1.5, rel=1e-7)
            assert swirl_tube.partial(a, z, 0.0, 2) == pytest.approx(0.0, abs=1e-7)
    assert swirl_tube.partial(0.4, 2.0, 0.0, 1) == pytest.approx(0.70711, abs=1e-5)
    assert swirl_tube.partial(0.4, 2.0, 0.0, 0, 3) == pytest.approx(-15 / 8 * 0.4 * 2**-3.5, rel=1e-5)


def test_map_invariants(swirl_tube, pipe_tube):
    for tube in (swirl_tube, pipe_tube):
        for z in np.linspace(*tube.z_span, 7):
            assert tube.R(0.0, z, 0.0) == 0.0
            for a in tube.r0_nodes[1:]:
                assert tube.partial(a, z, 0.0, 1) > 0
        for a in tube.r0_nodes:
            assert tube.R(a, tube.z_in, 0.0) == pytest.approx(a, abs=1e-14)


def test_trivial_maps(pipe_tube):
    tube = build_streamtube_map(StraightTube(Sinusoid()), clustered_nodes(1.0, 11), (0.0, 1.0),
                                [0.0, 0.5, 1.0, 1.5, 2.0])
    for a in (0.0, 0.3, 0.9):
        for z in (0.0, 0.6):
            for t in (0.2, 1.3):
                assert tube.R(a, z, t) == pytest.approx(a, abs=1e-12)
                assert tube.partial(a, z, t, 1) == pytest.approx(1.0, abs=1e-10)
                assert tube.partial(a, z, t, 0, 1) == pytest.approx(0.0, abs=1e-12)
                assert tube.partial(a, z, t, 0, 0, 1) == pytest.approx(0.0, abs=1e-10)
                assert inflow_propagation(tube, a, z, t) == pytest.approx(1.0, abs=1e-10)
    assert pipe_tube.R(0.5, 1.7, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert pipe_tube.partial(0.5, 1.7, 3.0, 0, 0, 1) == 0.0


def test_inflow_propagation_swirl(swirl_tube):
    for z in (1.0, 1.5, 2.0, 3.0):
        for a in (0.0, 1e-3, 0.2, 0.5, 0.95):
            assert inflow_propagation(swirl_tube, a, z, 0.0) == pytest.approx(z, rel=1e-8)


def test_rho_axis_continuity_and_slope(swirl_tube):
    axis = inflow_propagation(swirl_tube, 0.0, 2.0, 0.0)
    gaps = [abs(inflow_propagation(swirl_tube, a, 2.0, 0.0) - axis) for a in (1e-1, 1e-2, 1e-3)]
    assert max(gaps) < 1e-8
    # R~ is odd in a, so d_a^2 R~ = 0 on the axis and the axis slope of rho vanishes
    h = 1e-3
    slope = (inflow_propagation(swirl_tube, h, 2.0, 0.0) - axis) / h
    d2 = swirl_tube.partial(0.0, 2.0, 0.0, 2)
    d1 = swirl_tube.partial(0.0, 2.0, 0.0, 1)
    assert slope == pytest.approx(-2 * d2 / d1**3, abs=1e-3)


def test_rho_axis_slope_even_map():
    # R~ = b a + c a^2: rho = 1/((b + c a)(b + 2 c a)), slope -3c/b^3 = -(3/2) d2R/(dR)^3
    b, c = 1.3, 0.2
    fn = lambda a, z, t, da, dz, dt: ([b * a + c * a * a, b + 2 * c * a, 2 * c][da]
                                      if dz == dt == 0 and da <= 2 else 0.0)
    tube = SyntheticTubeMap(fn, steady=True)
    axis = inflow_propagation(tube, 0.0, 0.0, 0.0)
    assert axis == pytest.approx(1 / b**2)
    h = 1e-6
    slope = (inflow_propagation(tube, h, 0.0, 0.0) - axis) / h
    assert slope == pytest.approx(-3 * c / b**3, rel=1e-4)
    assert slope == pytest.approx(-1.5 * (2 * c) / b**3, rel=1e-4)


def test_degenerate_tube():
    fn = lambda a, z, t, da, dz, dt: [a - a**3, 1 - 3 * a * a][da] if dz == dt == 0 else 0.0
    tube = SyntheticTubeMap(fn, steady=True)
    with pytest.raises(DegenerateTube):
        inflow_propagation(tube, 0.9, 0.0, 0.0)


def _sympy_map():
    a, z, t = sp.symbols("a z t")
    expr = a * (1 + sp.Rational(1, 10) * sp.sin(t)) * (1 + a**2 / 5) / sp.sqrt(1 + z / 3)
    cache = {}

    def fn(av, zv, tv, da, dz, dt):
        key = (da, dz, dt)
        if key not in cache:
            cache[key] = sp.lambdify((a, z, t), sp.diff(expr, a, da, z, dz, t, dt))
        return cache[key](av, zv, tv)

    return expr, (a, z, t), SyntheticTubeMap(fn, r0_max=1.0)


def test_synthetic_map_rho_and_inverse():
    expr, (a, z, t), tube = _sympy_map()
    rho = 2 * a / sp.diff(expr**2, a)
    rho_f = sp.lambdify((a, z, t), rho)
    for av, zv, tv in [(0.2, 0.5, 0.1), (0.7, 1.9, 2.0), (0.05, 0.0, 1.0)]:
        assert inflow_propagation(tube, av, zv, tv) == pytest.approx(rho_f(av, zv, tv), rel=1e-12)
        r = tube.R(av, zv, tv)
        assert invert_streamtube(tube, r, zv, tv) == pytest.approx(av, abs=1e-13)
    axis = sp.limit(rho.subs({z: 1, t: 0}), a, 0)
    assert inflow_propagation(tube, 0.0, 1.0, 0.0) == pytest.approx(float(axis), rel=1e-12)


def test_invert_examples(swirl_tube):
    assert invert_streamtube(swirl_tube, 0.5, 2.0, 0.0) == pytest.approx(0.5 * math.sqrt(2), abs=1e-10)
    assert invert_streamtube(swirl_tube, 0.0, 2.0, 0.0) == 0.0
    straight = build_streamtube_map(StraightTube(), clustered_nodes(1.0, 11), (0.0, 1.0), [0.0])
    assert invert_streamtube(straight, 0.3, 0.5, 0.0) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(OutsideTubeRange):
        invert_streamtube(swirl_tube, 0.9, 2.0, 0.0)
    with pytest.raises(OutsideTubeRange):
        swirl_tube.R(0.5, 3.5, 0.0)


def test_inverse_roundtrip_on_nodes(swirl_tube, pipe_tube):
    for tube in (swirl_tube, pipe_tube):
        for z in np.linspace(*tube.z_span, 5):
            for a in tube.r0_nodes:
                r = tube.R(a, z, 0.0)
                back = invert_streamtube(tube, r, z, 0.0)
                assert back == pytest.approx(a, abs=1e-10)
                assert abs(tube.R(back, z, 0.0) - r) <= 1e-12 * tube.r_max(z, 0.0)


def test_reconstruct_examples(swirl_tube):
    field = StagnationSwirl(omega0=0.0)
    U = inlet_trace(field, 1.0)
    out = reconstruct_velocity(swirl_tube, U, 0.3, 2.0, 0.0)
    assert out["v_z"] == pytest.approx(2.0, rel=1e-9)
    assert out["v_r"] == pytest.approx(-0.15, rel=1e-8)
    straight = build_streamtube_map(StraightTube(Sinusoid()), clustered_nodes(1.0, 11), (0.0, 1.0),
                                    np.linspace(0, 2, 9))
    g = Sinusoid()
    out = reconstruct_velocity(straight, lambda a, t: g(t), 0.4, 0.5, 1.1)
    assert out["v_z"] == pytest.approx(g(1.1), rel=1e-10)
    assert out["v_r"] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("which", ["swirl", "pipe"])
def test_round_trip_random(which, swirl_tube, pipe_tube):
    field, tube = ((StagnationSwirl(omega0=0.0), swirl_tube) if which == "swirl"
                   else (Poiseuille(), pipe_tube))
    U = inlet_trace(field, tube.z_in)
    rng = np.random.default_rng(7)
    for _ in range(100):
        z = rng.uniform(*tube.z_span)
        r = rng.uniform(0.0, 1.0) * tube.r_max(z, 0.0)
        out = reconstruct_velocity(tube, U, r, z, 0.0)
        v = field.value(r, z, 0.0)
        assert out["v_z"] == pytest.approx(v[2], rel=1e-6)
        assert out["v_r"] == pytest.approx(v[0], rel=1e-6, abs=1e-12)


def test_time_partials_drifting_stagnation():
    # with drift d the frozen-time streamlines give R~ = a sqrt((A z_in + d)/(A z + d)), A = alpha m(t)
    m = Sinusoid(N=1.0, amplitude=0.3, mean=1.0)
    field = StagnationSwirl(alpha=1.0, omega0=0.0, drift=0.5, modulation=m)
    tube = build_streamtube_map(field, clustered_nodes(1.0, 21), (1.0, 2.0), np.linspace(0, 2, 41))
    a, z, t = sp.symbols("a z t")
    A = 1 + sp.Rational(3, 10) * sp.sin(t)
    expr = a * sp.sqrt((A + sp.Rational(1, 2)) / (A * z + sp.Rational(1, 2)))
    for key, tol in [((0, 0, 1), 1e-6), ((1, 0, 1), 1e-6), ((0, 1, 1), 1e-6), ((0, 0, 2), 1e-5)]:
        exact = sp.lambdify((a, z, t), sp.diff(expr, a, key[0], z, key[1], t, key[2]))
        for av, zv, tv in [(0.5, 1.5, 0.7), (0.8, 1.9, 1.2)]:
            got = tube.partial(av, zv, tv, *key)
            assert got == pytest.approx(exact(av, zv, tv), rel=tol, abs=tol * 1e-2)


def test_seed_spacing_too_coarse():
    # streamlines squeezed onto r = 0.5 merge in floating point, so tube ordering is lost
    field = FunctionField(v_r=lambda r, z, t: -60.0 * (r - 0.5) * r,
                          v_z=lambda r, z, t: 1.0, domain=Domain(r_max=2.0), steady=True)
    with pytest.raises(SeedSpacingTooCoarse):
        build_streamtube_map(field, [0.0, 0.3, 0.4, 0.6, 0.7], (0.0, 2.0), [0.0], ode_tol=1e-8)


def test_write_streamtube(tmp_path, swirl_tube):
    path = tmp_path / "streamtube.csv"
    write_streamtube(path, swirl_tube, [1.0, 2.0])
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(STREAMTUBE_COLUMNS)
    assert len(lines) == 1 + 2 * len(swirl_tube.r0_nodes)
    last = [float(x) for x in lines[-1].split(",")]
    assert last[3] == pytest.approx(1 / math.sqrt(2), rel=1e-9)
    assert last[6] == pytest.approx(2.0, rel=1e-8)


def test_threads_bitwise_identical():
    field = StagnationSwirl(omega0=0.0)
    one = build_streamtube_map(field, clustered_nodes(1.0, 11), (1.0, 2.0), [0.0], threads=1)
    four = build_streamtube_map(field, clustered_nodes(1.0, 11), (1.0, 2.0), [0.0], threads=4)
    assert one.rows([1.5, 2.0]) == four.rows([1.5, 2.0])


# swirl transport ------------------------------------------------------------

def test_gronwall_closed_form():
    field = StagnationSwirl(alpha=1.0, omega0=1.0)
    assert vtheta_gronwall(field, 0.5, 1.0, 1.0) == pytest.approx(0.5 * math.exp(0.5), abs=1e-6)


@pytest.mark.parametrize("field,seed,t", [
    (StagnationSwirl(alpha=1.0, omega0=1.0), (0.5, 1.0), 1.0),
    (StagnationSwirl(alpha=0.7, omega0=2.0, drift=0.3, modulation=Sinusoid(2.0, 0.4)), (0.3, 0.5), 0.8),
    (RigidHelixFlow(), (0.4, 0.0), 2.0),
])
def test_gronwall_matches_field(field, seed, t):
    tol = 1e-10
    traj = integrate_trajectory(field, seed[0], 0.0, seed[1], (0.0, t), tol)
    direct = field.value(traj.r[-1], traj.z[-1], t)[1]
    assert vtheta_gronwall(field, *seed, t, tol) == pytest.approx(direct, abs=10 * tol * max(1, abs(direct)))


def test_gronwall_trivial():
    assert vtheta_gronwall(RigidHelixFlow(2.0, 1.0), 0.3, 0.0, 5.0) == pytest.approx(0.6, rel=1e-12)
    assert vtheta_gronwall(StraightTube(), 0.3, 0.0, 1.0) == 0.0
    assert vtheta_gronwall(StagnationSwirl(), 0.0, 1.0, 1.0) == 0.0


# Lagrangian deformation ------------------------------------------------------

@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_deformation_stagnation(t):
    d = deformation_2d(StagnationSwirl(alpha=1.0), 0.5, 1.0, t, 1e-10)
    assert d.matrix == pytest.approx(np.diag([math.exp(-t / 2), math.exp(t)]), abs=1e-9)
    assert d.det == pytest.approx(math.exp(t / 2), abs=1e-9)
    assert d.det_law == pytest.approx(math.exp(t / 2), abs=1e-9)


def test_deformation_example_and_identity():
    d = deformation_2d(StagnationSwirl(alpha=1.0), 0.5, 1.0, 0.5)
    assert d.det == pytest.approx(1.28403, abs=1e-5)
    d0 = deformation_2d(StagnationSwirl(alpha=1.0), 0.5, 1.0, 0.0)
    assert (d0.matrix == np.eye(2)).all() and d0.det == 1.0


@pytest.mark.parametrize("field", [StraightTube(Sinusoid()), ShearFlow(), RigidHelixFlow(), Poiseuille()])
def test_deformation_no_radial_flow(field):
    d = deformation_2d(field, 0.4, 0.0, 0.6)
    assert d.det == pytest.approx(1.0, abs=1e-10)
    assert d.det_law == 1.0


def test_deformation_against_neighbour_trajectories():
    # cross-trajectory differencing as an independent oracle for the integrated entries
    field = StagnationSwirl(alpha=0.8, omega0=0.0, drift=0.4, modulation=Sinusoid(1.5, 0.3))
    r0, z0, t, h, tol = 0.4, 0.6, 0.7, 1e-4, 1e-12
    end = lambda r, z: (lambda tr: np.array([tr.r[-1], tr.z[-1]]))(
        integrate_trajectory(field, r, 0.0, z, (0.0, t), tol))
    col_r = (end(r0 + h, z0) - end(r0 - h, z0)) / (2 * h)
    col_z = (end(r0, z0 + h) - end(r0, z0 - h)) / (2 * h)
    d = deformation_2d(field, r0, z0, t, 1e-11)
    assert d.matrix == pytest.approx(np.column_stack([col_r, col_z]), abs=1e-6)
    assert d.det == pytest.approx(d.det_law, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(r0=st.floats(0.05, 0.9), z0=st.floats(0.2, 2.0), t=st.floats(0.05, 1.0))
def test_determinant_law_property(r0, z0, t):
    field = StagnationSwirl(alpha=1.0, omega0=1.0, drift=0.2, modulation=Sinusoid(1.0, 0.5))
    tol = 1e-10
    d = deformation_2d(field, r0, z0, t, tol)
    assert d.det == pytest.approx(d.det_law, abs=10 * tol * d.det_law)
