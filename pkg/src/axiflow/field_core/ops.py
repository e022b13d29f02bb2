"""Point operations on fields: evaluation, jets, divergence, acceleration."""
from __future__ import annotations

import math

import numpy as np

from ..errors import NegativeRadius, OutOfDomain, ThirdOrderUnavailable
from .fixtures import Field
from .types import JET_KEYS, THIRD_KEYS, CylVec, FieldJet, cart_to_cyl, cyl_to_cart

AXIS_FRACTION = 1e-8


def on_axis(field: Field, r: float) -> bool:
    return abs(r) < AXIS_FRACTION * field.length_scale


def check_point(field: Field, r, z, t):
    if r < 0:
        raise NegativeRadius(f"negative radius r={r}", r=r)
    if not field.domain.contains(r, z, t):
        raise OutOfDomain(f"point (r={r}, z={z}, t={t}) outside {field.kind} domain",
                          r=r, z=z, t=t)


def evaluate(field: Field, r, z, t) -> CylVec:
    check_point(field, r, z, t)
    return CylVec.of(field.value(r, z, t))


def jet(field: Field, r, z, t, want_third=False) -> FieldJet:
    check_point(field, r, z, t)
    if want_third and field.max_order < 3:
        raise ThirdOrderUnavailable(f"{field.kind} provides derivatives up to order {field.max_order}")
    keys = dict(JET_KEYS)
    if want_third:
        keys.update(THIRD_KEYS)
    return FieldJet(**{name: CylVec.of(field.partial(r, z, t, order)) for name, order in keys.items()})


def partials(field: Field, r, z, t, orders):
    """Dict of raw partial arrays for the requested multi-indices (no checks)."""
    return {o: field.partial(r, z, t, o) for o in orders}


FIRST = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


def divergence(field: Field, r, z, t) -> float:
    check_point(field, r, z, t)
    d = partials(field, r, z, t, FIRST)
    if on_axis(field, r):
        return 2.0 * d[(1, 0, 0)][0] + d[(0, 1, 0)][2]
    return d[(1, 0, 0)][0] + d[(0, 0, 0)][0] / r + d[(0, 1, 0)][2]


def _accel(d, r, axis):
    v, vr, vz, vt = d[(0, 0, 0)], d[(1, 0, 0)], d[(0, 1, 0)], d[(0, 0, 1)]
    if axis:
        # v_theta/r -> d_r v_theta on the axis
        hoop = v[1] * vr[1]
        cross = v[0] * vr[1]
    else:
        hoop = v[1] * v[1] / r
        cross = v[0] * v[1] / r
    return np.array([
        vt[0] + v[0] * vr[0] + v[2] * vz[0] - hoop,
        vt[1] + v[0] * vr[1] + v[2] * vz[1] + cross,
        vt[2] + v[0] * vr[2] + v[2] * vz[2],
    ])


def acceleration_array(field: Field, r, z, t) -> np.ndarray:
    """Unchecked material acceleration D_t u in cylindrical components."""
    return _accel(partials(field, r, z, t, FIRST), r, on_axis(field, r))


def acceleration(field: Field, r, z, t) -> CylVec:
    check_point(field, r, z, t)
    return CylVec.of(acceleration_array(field, r, z, t))


def pressure_compatibility(field: Field, r, z, t) -> dict:
    """A_theta and d_z A_r - d_r A_z; both vanish iff -A is an axisymmetric gradient."""
    check_point(field, r, z, t)
    orders = FIRST + [(1, 1, 0), (0, 2, 0), (2, 0, 0), (1, 0, 1), (0, 1, 1)]
    d = partials(field, r, z, t, orders)
    v, vr, vz = d[(0, 0, 0)], d[(1, 0, 0)], d[(0, 1, 0)]
    vrz, vzz, vrr = d[(1, 1, 0)], d[(0, 2, 0)], d[(2, 0, 0)]
    vrt, vzt = d[(1, 0, 1)], d[(0, 1, 1)]
    axis = on_axis(field, r)
    a = _accel(d, r, axis)
    swirl_over_r = vr[1] if axis else v[1] / r
    dz_ar = (vzt[0] + vz[0] * vr[0] + v[0] * vrz[0] + vz[2] * vz[0] + v[2] * vzz[0]
             - 2.0 * swirl_over_r * vz[1])
    dr_az = vrt[2] + vr[0] * vr[2] + v[0] * vrr[2] + vr[2] * vz[2] + v[2] * vrz[2]
    return {"a_theta": float(a[1]), "curl_mismatch": float(dz_ar - dr_az)}


# Cartesian helpers ---------------------------------------------------------

def cylindrical_point(x):
    return math.hypot(x[0], x[1]), math.atan2(x[1], x[0]), x[2]


def velocity_cart(field: Field, x, t) -> np.ndarray:
    r, th, z = cylindrical_point(x)
    v = field.value(r, z, t)
    if on_axis(field, r):
        # direction of e_r is undefined on the axis; only v_z survives
        return np.array([0.0, 0.0, v[2]])
    return cyl_to_cart(v, th)


def acceleration_cart(field: Field, x, t) -> np.ndarray:
    r, th, z = cylindrical_point(x)
    return cyl_to_cart(acceleration_array(field, r, z, t), th)
