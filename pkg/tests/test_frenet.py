import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axiflow.errors import Degenerate, InsufficientSpan, TubeViolation
from axiflow.field_core import RigidHelixFlow, StraightTube
from axiflow.frenet import (ds_kappa_asymptotic, frame_explicit, frame_numeric,
                            frenet_ode_residuals, kappa_squared, moving_frame_matrices)
from axiflow.lagrange import ArcCurve, SyntheticAxisCurve, axis_length_reparam, integrate_trajectory


def helix_curve(a, omega=2.0, W=1.0, T=3.0):
    return axis_length_reparam(integrate_trajectory(RigidHelixFlow(omega, W), a, 0.0, 0.0, (0.0, T)))


def test_helix_closed_forms(helix_arc):
    f = frame_explicit(helix_arc.curve, 1.5)
    assert f.kappa == pytest.approx(1.0, rel=1e-9)
    assert f.torsion == pytest.approx(1.0, rel=1e-6)
    assert abs(f.ds_kappa) < 1e-8
    g = frame_numeric(helix_arc, 2.0, 1e-3)
    assert g.kappa == pytest.approx(1.0, rel=1e-6)
    assert g.torsion == pytest.approx(1.0, rel=1e-5)


def test_frame_orthonormal(swirl_arc):
    for s in np.linspace(0.1, swirl_arc.length - 0.1, 6):
        f = frame_explicit(swirl_arc.curve, swirl_arc.z_of(s))
        M = np.array([f.tau, f.n, f.b])
        np.testing.assert_allclose(M @ M.T, np.eye(3), atol=1e-10)
        assert f.torsion >= 0
        np.testing.assert_allclose(f.b, f.sigma * np.cross(f.tau, f.n), atol=1e-12)


def test_explicit_vs_numeric_routes(swirl_arc):
    for s in np.linspace(0.05, swirl_arc.length - 0.05, 20):
        f = frame_explicit(swirl_arc.curve, swirl_arc.z_of(s))
        g = frame_numeric(swirl_arc, s, 1e-3)
        assert g.kappa == pytest.approx(f.kappa, rel=1e-5)
        assert g.torsion == pytest.approx(f.torsion, rel=1e-5)
        assert g.ds_kappa == pytest.approx(f.ds_kappa, rel=1e-5, abs=1e-5 * f.kappa)


def test_kappa_closed_form_matches_cross_product():
    # curve R = 0.3 + 0.1 z^2, Theta = z + 0.2 z^3
    R = lambda z, n: [0.3 + 0.1 * z * z, 0.2 * z, 0.2, 0.0][n]
    Th = lambda z, n: [z + 0.2 * z**3, 1 + 0.6 * z**2, 1.2 * z, 1.2][n]
    c = SyntheticAxisCurve(R, Th, 0.0, 2.0)
    z = 0.7
    p = lambda zz: np.array([R(zz, 0) * math.cos(Th(zz, 0)), R(zz, 0) * math.sin(Th(zz, 0)), zz])
    h = 1e-3
    d1 = (p(z - 2 * h) - 8 * p(z - h) + 8 * p(z + h) - p(z + 2 * h)) / (12 * h)
    d2 = (-p(z - 2 * h) + 16 * p(z - h) - 30 * p(z) + 16 * p(z + h) - p(z + 2 * h)) / (12 * h * h)
    want = np.linalg.norm(np.cross(d1, d2)) / np.linalg.norm(d1) ** 3
    assert frame_explicit(c, z).kappa == pytest.approx(want, rel=1e-6)
    assert math.sqrt(kappa_squared(R(z, 0), R(z, 1), R(z, 2), Th(z, 1), Th(z, 2))) == pytest.approx(want, rel=1e-6)
    arc = ArcCurve(c)
    g = frame_numeric(arc, arc.s_of(z), 1e-3)
    f = frame_explicit(c, z)
    assert g.torsion == pytest.approx(f.torsion, rel=1e-5)
    assert g.ds_kappa == pytest.approx(f.ds_kappa, rel=1e-5)


def test_straight_tube_degenerate():
    c = axis_length_reparam(integrate_trajectory(StraightTube(), 0.5, 0.0, 0.0, (0.0, 2.0)))
    f = frame_explicit(c, 1.0)
    assert f.degenerate and f.kappa == 0.0
    with pytest.raises(Degenerate):
        frame_explicit(c, 1.0, strict=True)


def test_near_axis_helix_curvature():
    r0 = 1e-3
    f = frame_explicit(helix_curve(r0), 1.0)
    exact = r0 * 4 / (r0 * r0 * 4 + 1)
    assert f.kappa == pytest.approx(exact, rel=1e-9)
    assert f.kappa / r0 == pytest.approx(4.0, rel=1e-5)


def test_circle_limit():
    # W -> 0: kappa -> 1/a, T -> 0
    f = frame_explicit(helix_curve(0.5, omega=2.0, W=1e-3, T=0.5), 1e-4)
    assert f.kappa == pytest.approx(2.0, rel=1e-5)
    assert f.torsion == pytest.approx(0.0, abs=1e-2)


def test_frenet_ode_residuals(swirl_arc):
    res = frenet_ode_residuals(swirl_arc, swirl_arc.length / 2)
    assert max(res) <= 1e-4


def test_insufficient_span(helix_arc):
    with pytest.raises(InsufficientSpan):
        frame_numeric(helix_arc, 0.0, 1e-3)


def test_frame_matrices_example():
    m = moving_frame_matrices(1.0, 2.0, 0.5, 0.0)
    np.testing.assert_allclose(m.forward[0], [0.5, 0.0, 1.0])
    np.testing.assert_allclose(m.inverse[0], [2.0, 0.0, -2.0])
    np.testing.assert_allclose(moving_frame_matrices(3.0, 1.0, 0.0, 0.0).forward, np.eye(3))
    with pytest.raises(TubeViolation):
        moving_frame_matrices(2.0, 0.0, 0.5, 0.0)


@settings(max_examples=1000, deadline=None)
@given(st.floats(0, 10), st.floats(-10, 10), st.floats(-1, 1), st.floats(-1, 1))
def test_frame_matrices_mutual_inverse(kappa, T, rb, zb):
    if 1 - kappa * rb <= 0.1:
        return
    m = moving_frame_matrices(kappa, T, rb, zb)
    np.testing.assert_allclose(m.forward @ m.inverse, np.eye(3), atol=1e-12)


def test_orientation_flip_keeps_kappa():
    up = SyntheticAxisCurve(lambda z, n: [0.5, 0, 0, 0][n], lambda z, n: [2 * z, 2, 0, 0][n], 0, 2)
    down = SyntheticAxisCurve(lambda z, n: [0.5, 0, 0, 0][n], lambda z, n: [-2 * z, -2, 0, 0][n], 0, 2)
    a, b = frame_explicit(up, 1.0), frame_explicit(down, 1.0)
    assert a.kappa == pytest.approx(b.kappa)
    assert a.torsion == pytest.approx(b.torsion) and a.sigma == -b.sigma


def test_asymptotic_regimes(helix_arc):
    assert ds_kappa_asymptotic(helix_arc.curve, 1.0, "breakdown") == pytest.approx(0, abs=1e-9)
    assert ds_kappa_asymptotic(helix_arc.curve, 1.0, "blowup") == pytest.approx(0, abs=1e-6)
    eps = 1e-2
    for r0 in (1e-2, 1e-3):
        c = SyntheticAxisCurve(lambda z, n: [r0, 0, 0, 0][n],
                               lambda z, n: [eps * z**3, 3 * eps * z**2, 6 * eps * z, 6 * eps][n],
                               -1.0, 1.0)
        asym = ds_kappa_asymptotic(c, 0.0, "blowup")
        assert asym == pytest.approx(6 * eps * r0)
        # kappa vanishes at z = 0 with a kink, so compare just beside it
        assert frame_explicit(c, 1e-2, floor=0.0).ds_kappa == pytest.approx(asym, rel=0.05)


def test_breakdown_regime_scaling():
    a, b = 2.0, 0.05
    gaps = []
    for R in (1e-2, 1e-3, 1e-4):
        c = SyntheticAxisCurve(lambda z, n: [R, 0, 0, 0][n],
                               lambda z, n: [a * z + b * z * z, a + 2 * b * z, 2 * b, 0][n], -1, 1)
        asym = ds_kappa_asymptotic(c, 0.0, "breakdown")
        assert asym == pytest.approx(R * a * 2 * b)
        full = frame_explicit(c, 0.0).ds_kappa
        # small R: kappa ~ R sqrt(T1^4 + T2^2), so d_s kappa ~ 2 R T1^3 T2 / sqrt(T1^4 + T2^2)
        limit = 2.0 / math.sqrt(1.0 + (2 * b) ** 2 / a**4)
        gaps.append(abs(full / asym - limit))
    assert gaps[-1] < 1e-6
    assert gaps[0] > gaps[1] > gaps[2]
