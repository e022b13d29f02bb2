"""Particle trajectories, axis-length curves and arc-length curves.

A trajectory solves dR/dt = v_r, dZ/dt = v_z, dTheta/dt = v_theta/R.  For
unilateral flow (v_z > 0) it can be reparametrised by z, giving an
:class:`AxisCurve` with tables of R, Theta and their z-derivatives; the
frozen-time streamline is the same object with t held fixed.

Derivatives up to order two along a curve come from field jets by the chain
rule; order three is a 5-point central difference of the order-two values,
evaluated on a tightly re-integrated local piece of the curve so that the
stencil sees a smooth path rather than the interpolant of the adaptive solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import (DegenerateSpeed, DomainError, InsufficientSpan, NotUnilateral,
                     OutOfDomain, StiffnessFailure)
from .field_core import Field, check_point, on_axis, velocity_cart
from .field_core.types import cyl_to_cart
from .io import write_csv

DEFAULT_ODE_TOL = 1e-10
LOCAL_TOL = 1e-13
ODE_METHOD = "RK45"        # Dormand-Prince 5(4), quartic dense output
# The quartic interpolant is less accurate than the step itself; capping the
# step keeps dense-output queries near the requested tolerance.
DENSE_STEPS = 64

TRAJECTORY_COLUMNS = ("seed_r0", "seed_theta0", "seed_z0", "t", "r", "theta", "z")


def _solve(rhs, span, y0, tol, **kw):
    sol = solve_ivp(rhs, span, y0, method=kw.pop("method", ODE_METHOD), rtol=tol, atol=tol, **kw)
    if sol.status == -1:
        raise StiffnessFailure(f"integration failed: {sol.message}", t=float(sol.t[-1]))
    return sol


def _domain_event(field):
    def event(t, y):
        return field.domain.margin(y[0], y[2], t)
    event.terminal = True
    event.direction = -1
    return event


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    seed: tuple
    field: Field
    dense: object
    ode_tol: float
    status: str = "ok"
    message: str = ""

    @property
    def t_start(self):
        return float(self.t[0])

    @property
    def t_end(self):
        return float(self.t[-1])

    @property
    def left_domain(self):
        return self.status == "left_domain"

    def at(self, t):
        """(R*, Theta*, Z*) at time t from the dense output."""
        if not (self.t[0] - 1e-12 <= t <= self.t[-1] + 1e-12):
            raise OutOfDomain(f"t={t} outside integrated span [{self.t[0]}, {self.t[-1]}]")
        y = self.dense(t)
        return float(y[0]), float(y[1]), float(y[2])

    def point(self, t):
        r, th, z = self.at(t)
        return np.array([r * math.cos(th), r * math.sin(th), z])

    @property
    def samples(self):
        return [{"t": float(a), "r": float(b), "theta": float(c), "z": float(d)}
                for a, b, c, d in zip(self.t, self.r, self.theta, self.z)]

    def rows(self):
        r0, th0, z0 = self.seed
        for s in self.samples:
            yield {"seed_r0": r0, "seed_theta0": th0, "seed_z0": z0, **s}


def integrate_trajectory(field: Field, r0, theta0, z0, t_span, ode_tol=DEFAULT_ODE_TOL,
                         n_samples=None) -> Trajectory:
    """Integrate a particle path from the seed over ``t_span``.

    If the path exits the field domain the partial result is returned with
    ``status == "left_domain"``.  ``n_samples`` replaces the adaptive step
    points by a uniform time grid of that size (the dense output is kept).
    """
    t0, t1 = map(float, t_span)
    if t1 <= t0:
        raise ValueError("t_span must be increasing (no backward integration)")
    if ode_tol <= 0:
        raise ValueError("ode_tol must be positive")
    check_point(field, r0, z0, t0)
    axis = r0 == 0.0

    def rhs(t, y):
        r, _, z = y
        v = field.value(r, z, t)
        if axis:
            return [0.0, field.partial(0.0, z, t, (1, 0, 0))[1], v[2]]
        if on_axis(field, r):
            w = field.partial(r, z, t, (1, 0, 0))[1]
        else:
            w = v[1] / r
        return [v[0], w, v[2]]

    sol = _solve(rhs, (t0, t1), [float(r0), float(theta0), float(z0)], ode_tol,
                 dense_output=True, events=_domain_event(field), max_step=(t1 - t0) / DENSE_STEPS)
    status, message = "ok", ""
    if sol.status == 1:
        status, message = "left_domain", f"left {field.kind} domain at t={sol.t[-1]:.6g}"
    t = sol.t
    y = sol.y
    if n_samples:
        t = np.linspace(t0, sol.t[-1], int(n_samples))
        y = sol.sol(t)
    return Trajectory(t=t, r=y[0], theta=y[1], z=y[2], seed=(float(r0), float(theta0), float(z0)),
                      field=field, dense=sol.sol, ode_tol=ode_tol, status=status, message=message)


def write_trajectories(path, trajectories) -> None:
    rows = (row for tr in trajectories for row in tr.rows())
    write_csv(path, TRAJECTORY_COLUMNS, rows)


# ---------------------------------------------------------------------------
# axis-length curves

@dataclass(frozen=True)
class CurveJet:
    """Position and z-derivatives of R(z), Theta(z) at one station."""
    z: float
    R: float
    dR: float
    d2R: float
    d3R: float
    theta: float
    dtheta: float
    d2theta: float
    d3theta: float
    t: float = float("nan")

    @property
    def speed(self):
        """|d Phi/dz| = (1 + R'^2 + (R Theta')^2)^(1/2)."""
        return math.sqrt(1.0 + self.dR**2 + (self.R * self.dtheta) ** 2)


# 5-point central first-derivative weights, offsets -2..2
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
# one-sided 5-point first derivative at offset 0 using 0..4 (and mirrored)
_D1_FWD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


class AxisCurve:
    """Curve parametrised by the axial coordinate z."""

    kind = "curve"

    def __init__(self, z_start, z_end, z_samples=None, length_scale=1.0):
        self.z_start = float(z_start)
        self.z_end = float(z_end)
        if z_samples is None:
            z_samples = np.linspace(self.z_start, self.z_end, 41)
        self.z_samples = np.asarray(z_samples, dtype=float)
        self.length_scale = float(length_scale)

    # subclasses provide state(z) -> (R, Theta, t) and _order2(z, state)
    def state(self, z):
        raise NotImplementedError

    def _order2(self, z, state):
        raise NotImplementedError

    def _local_states(self, z0, state0, dzs):
        raise NotImplementedError

    def _check(self, z):
        if not (self.z_start - 1e-12 <= z <= self.z_end + 1e-12):
            raise OutOfDomain(f"z={z} outside curve span [{self.z_start}, {self.z_end}]")

    def diff_step(self, z):
        i = np.searchsorted(self.z_samples, z)
        lo = max(i - 1, 0)
        hi = min(i + 1, len(self.z_samples) - 1)
        spacing = (self.z_samples[hi] - self.z_samples[lo]) / max(hi - lo, 1)
        return min(spacing, 1e-2 * self.length_scale, (self.z_end - self.z_start) / 20)

    def jet(self, z, third=True) -> CurveJet:
        self._check(z)
        st = self.state(z)
        R1, R2, T1, T2 = self._order2(z, st)
        R3 = T3 = float("nan")
        if third:
            R3, T3 = self._order3(z, st)
        return CurveJet(z=z, R=st[0], dR=float(R1), d2R=float(R2), d3R=float(R3), theta=st[1],
                        dtheta=float(T1), d2theta=float(T2), d3theta=float(T3), t=st[2])

    def _order3(self, z, st):
        h = self.diff_step(z)
        for offsets, weights in (((-2, -1, 0, 1, 2), _D1),
                                 ((0, 1, 2, 3, 4), _D1_FWD),
                                 ((0, -1, -2, -3, -4), -_D1_FWD)):
            try:
                dzs = [k * h for k in offsets]
                states = self._local_states(z, st, dzs)
                vals = np.array([self._order2(z + dz, s)[1::2] for dz, s in zip(dzs, states)])
            except DomainError:
                continue
            d = weights @ vals / h
            return float(d[0]), float(d[1])
        raise InsufficientSpan(f"no room for third-derivative stencil at z={z}")

    @cached_property
    def tables(self) -> dict:
        """R, Theta, t and their z-derivatives at ``z_samples``."""
        jets = [self.jet(z) for z in self.z_samples]
        names = ("R", "dR", "d2R", "d3R", "theta", "dtheta", "d2theta", "d3theta", "t")
        out = {n: np.array([getattr(j, n) for j in jets]) for n in names}
        out["z"] = self.z_samples.copy()
        return out

    @cached_property
    def approx_length(self):
        """Chord-polygon length through the samples (used for scale-relative floors)."""
        pts = np.array([self.point(z) for z in self.z_samples])
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))

    def point(self, z):
        R, th, _ = self.state(z)
        return np.array([R * math.cos(th), R * math.sin(th), z])

    def arc_speed(self, z):
        st = self.state(z)
        R1, _, T1, _ = self._order2(z, st)
        return math.sqrt(1.0 + R1 * R1 + (st[0] * T1) ** 2)

    def local_arc_points(self, z, s_offsets):
        """Displacements phi(s + ds) - phi(s) at arc-length offsets ``ds`` from Phi(z).

        Returned relative to the centre so that stencils difference small
        numbers rather than absolute coordinates.
        """
        raise NotImplementedError


class FlowAxisCurve(AxisCurve):
    """Axis-length streamline (t frozen) or trajectory (t = Z*^{-1}(z)) of a field."""

    def __init__(self, field, kind, state_fn, z_start, z_end, z_samples, t_frozen=None,
                 ode_tol=DEFAULT_ODE_TOL, axis=False, seed=None):
        super().__init__(z_start, z_end, z_samples, field.length_scale)
        self.field = field
        self.kind = kind
        self._state_fn = state_fn
        self.t_frozen = t_frozen
        self.ode_tol = ode_tol
        self.axis = axis
        self.seed = seed

    def state(self, z):
        self._check(z)
        R, th, t = self._state_fn(z)
        if self.axis:
            R = 0.0
        return float(R), float(th), float(t)

    def _rhs_z(self, z, y):
        R, _, t = y
        f = self.field
        if self.kind == "streamline":
            t = self.t_frozen
        v = f.value(R, z, t)
        if v[2] <= 0:
            raise NotUnilateral(f"v_z = {v[2]:.3g} <= 0 at (r={R:.6g}, z={z:.6g}, t={t:.6g})",
                                r=float(R), z=float(z), t=float(t))
        if self.axis or on_axis(f, R):
            w = f.partial(0.0 if self.axis else R, z, t, (1, 0, 0))[1]
            dR = 0.0 if self.axis else v[0] / v[2]
        else:
            w = v[1] / R
            dR = v[0] / v[2]
        dt = 0.0 if self.kind == "streamline" else 1.0 / v[2]
        return [dR, w / v[2], dt]

    def _local_states(self, z0, state0, dzs):
        f = self.field
        out = {}
        for direction in (1, -1):
            targets = sorted((dz for dz in dzs if dz * direction > 0), key=abs)
            if not targets:
                continue
            z_targets = [z0 + dz for dz in targets]
            if not f.domain.contains(max(state0[0], 0.0), z_targets[-1], state0[2]):
                raise OutOfDomain("stencil leaves field domain")
            sol = _solve(self._rhs_z, (z0, z_targets[-1]), list(state0), LOCAL_TOL,
                         method="DOP853", t_eval=z_targets)
            if sol.status != 0:
                raise OutOfDomain("local re-integration stopped early")
            for dz, k in zip(targets, range(len(targets))):
                out[dz] = (float(sol.y[0, k]), float(sol.y[1, k]), float(sol.y[2, k]))
        return [state0 if dz == 0 else out[dz] for dz in dzs]

    def _order2(self, z, state):
        R, _, t = state
        f = self.field
        if self.kind == "streamline":
            t = self.t_frozen
        axis = self.axis or on_axis(f, R)
        rr = 0.0 if axis else R
        orders = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
        if axis:
            orders += [(1, 1, 0), (1, 0, 1)]
        d = {o: f.partial(rr, z, t, o) for o in orders}
        v, vr, vz, vt = d[(0, 0, 0)], d[(1, 0, 0)], d[(0, 1, 0)], d[(0, 0, 1)]
        if v[2] <= 0:
            raise NotUnilateral(f"v_z <= 0 at z={z}", z=float(z))
        tp = 0.0 if self.kind == "streamline" else 1.0 / v[2]
        R1 = 0.0 if axis else v[0] / v[2]
        Dv = vz + R1 * vr + tp * vt
        R2 = (Dv[0] * v[2] - v[0] * Dv[2]) / v[2] ** 2
        if axis:
            q = vr[1] / v[2]
            Dq_num = d[(1, 1, 0)][1] + tp * d[(1, 0, 1)][1]
            return 0.0, 0.0, q, (Dq_num * v[2] - vr[1] * Dv[2]) / v[2] ** 2
        w = v[1] / v[2]
        Dw = (Dv[1] * v[2] - v[1] * Dv[2]) / v[2] ** 2
        return R1, R2, w / R, Dw / R - w * R1 / R**2

    def local_arc_points(self, z, s_offsets):
        f = self.field
        R, th, t = self.state(z)
        x0 = np.array([R * math.cos(th), R * math.sin(th), z])
        streamline = self.kind == "streamline"
        t0 = self.t_frozen if streamline else t

        def rhs(s, y):
            u = velocity_cart(f, x0 + y[:3], t0 + y[3])
            sp = np.linalg.norm(u)
            return [*(u / sp), 0.0 if streamline else 1.0 / sp]

        y0 = [0.0, 0.0, 0.0, 0.0]
        pts = {0.0: np.zeros(3)}
        for direction in (1, -1):
            targets = sorted((ds for ds in s_offsets if ds * direction > 0), key=abs)
            if not targets:
                continue
            sol = _solve(rhs, (0.0, targets[-1]), y0, LOCAL_TOL, method="DOP853", t_eval=targets)
            for k, ds in enumerate(targets):
                pts[ds] = sol.y[:3, k]
        return np.array([pts[0.0 if ds == 0 else ds] for ds in s_offsets])


class SyntheticAxisCurve(AxisCurve):
    """Curve from closed-form R(z) and Theta(z).

    ``R`` and ``theta`` are callables ``(z, n) -> n-th derivative``.
    """

    kind = "synthetic"

    def __init__(self, R, theta, z_start, z_end, z_samples=None, length_scale=1.0):
        super().__init__(z_start, z_end, z_samples, length_scale)
        self._R = R
        self._theta = theta

    def state(self, z):
        return float(self._R(z, 0)), float(self._theta(z, 0)), float("nan")

    def _order2(self, z, state):
        return (self._R(z, 1), self._R(z, 2), self._theta(z, 1), self._theta(z, 2))

    def _order3(self, z, st):
        return float(self._R(z, 3)), float(self._theta(z, 3))

    def _local_states(self, z0, state0, dzs):
        return [self.state(z0 + dz) for dz in dzs]

    def local_arc_points(self, z, s_offsets):
        def rhs(s, y):
            return [1.0 / self.arc_speed_unchecked(z + y[0])]

        x0 = self.point_unchecked(z)
        pts = {0.0: np.zeros(3)}
        for direction in (1, -1):
            targets = sorted((ds for ds in s_offsets if ds * direction > 0), key=abs)
            if not targets:
                continue
            sol = _solve(rhs, (0.0, targets[-1]), [0.0], LOCAL_TOL, method="DOP853", t_eval=targets)
            for k, ds in enumerate(targets):
                dz = sol.y[0, k]
                p = self.point_unchecked(z + dz) - x0
                p[2] = dz
                pts[ds] = p
        return np.array([pts[0.0 if ds == 0 else ds] for ds in s_offsets])

    def point_unchecked(self, z):
        R, th = self._R(z, 0), self._theta(z, 0)
        return np.array([R * math.cos(th), R * math.sin(th), z])

    def arc_speed_unchecked(self, z):
        R, R1, T1 = self._R(z, 0), self._R(z, 1), self._theta(z, 1)
        return math.sqrt(1.0 + R1 * R1 + (R * T1) ** 2)


def integrate_streamline(field: Field, r0_tilde, t_frozen, z_span, ode_tol=DEFAULT_ODE_TOL,
                         theta0=0.0) -> FlowAxisCurve:
    """Axis-length streamline dR/dz = v_r/v_z, R dTheta/dz = v_theta/v_z at frozen t."""
    z0, z1 = map(float, z_span)
    if z1 <= z0:
        raise ValueError("z_span must be increasing")
    check_point(field, r0_tilde, z0, t_frozen)
    axis = r0_tilde == 0.0
    curve = FlowAxisCurve(field, "streamline", None, z0, z1, None, t_frozen=t_frozen,
                          ode_tol=ode_tol, axis=axis, seed=(float(r0_tilde), float(theta0), z0))
    sol = _solve(curve._rhs_z, (z0, z1), [float(r0_tilde), float(theta0), float(t_frozen)],
                 ode_tol, dense_output=True, max_step=(z1 - z0) / DENSE_STEPS)
    dense = sol.sol

    def state_fn(z):
        y = dense(z)
        return y[0], y[1], t_frozen

    curve._state_fn = state_fn
    curve.z_samples = sol.t
    return curve


def axis_length_reparam(traj: Trajectory, field: Field = None) -> FlowAxisCurve:
    """Reparametrise a unilateral trajectory by z: t = Z*^{-1}(z)."""
    field = field or traj.field
    if np.any(np.diff(traj.z) <= 0):
        k = int(np.argmin(np.diff(traj.z)))
        raise NotUnilateral("trajectory z is not strictly increasing", t=float(traj.t[k]),
                            z=float(traj.z[k]))
    for t, r, z in zip(traj.t, traj.r, traj.z):
        vz = field.value(r, z, t)[2]
        if vz <= 0:
            raise NotUnilateral(f"v_z <= 0 along trajectory at t={t}", t=float(t), z=float(z))
    ts, zs = traj.t, traj.z

    def t_of_z(z):
        if z <= zs[0]:
            return ts[0]
        if z >= zs[-1]:
            return ts[-1]
        i = int(np.searchsorted(zs, z))
        if zs[i] == z:
            return ts[i]
        f = lambda tt: traj.dense(tt)[2] - z
        lo, hi = ts[i - 1], ts[i]
        if f(lo) > 0:
            lo = ts[max(i - 2, 0)]
        if f(hi) < 0:
            hi = ts[min(i + 1, len(ts) - 1)]
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def state_fn(z):
        t = t_of_z(z)
        y = traj.dense(t)
        return y[0], y[1], t

    return FlowAxisCurve(field, "trajectory", state_fn, zs[0], zs[-1], zs.copy(),
                         ode_tol=traj.ode_tol, axis=traj.seed[0] == 0.0, seed=traj.seed)


# ---------------------------------------------------------------------------
# arc-length curves

class ArcCurve:
    """Arc-length description phi(s) = Phi(z(s)) of an axis-length curve."""

    def __init__(self, curve: AxisCurve, quad_tol=1e-12):
        self.curve = curve
        self.quad_tol = quad_tol
        zs = curve.z_samples
        s = [0.0]
        for a, b in zip(zs[:-1], zs[1:]):
            s.append(s[-1] + self._segment(a, b))
        self.z_samples = zs.copy()
        self.s_samples = np.array(s)

    def _speed(self, z):
        sp = self.curve.arc_speed(z)
        if not sp > 0:
            raise DegenerateSpeed(f"|dPhi/dz| = 0 at z={z}")
        return sp

    def _segment(self, a, b):
        val, _ = quad(self._speed, a, b, epsabs=self.quad_tol, epsrel=self.quad_tol, limit=100)
        return val

    @property
    def length(self):
        return float(self.s_samples[-1])

    def s_of(self, z):
        i = int(np.clip(np.searchsorted(self.z_samples, z) - 1, 0, len(self.z_samples) - 1))
        return float(self.s_samples[i] + self._segment(self.z_samples[i], z))

    def z_of(self, s):
        if not (-1e-12 <= s <= self.length + 1e-12):
            raise OutOfDomain(f"s={s} outside [0, {self.length}]")
        i = int(np.clip(np.searchsorted(self.s_samples, s), 1, len(self.s_samples) - 1))
        lo, hi = self.z_samples[i - 1], self.z_samples[i]
        if s <= 0:
            return float(self.z_samples[0])
        if s >= self.length:
            return float(self.z_samples[-1])
        return brentq(lambda z: self.s_of(z) - s, lo, hi, xtol=1e-14)

    def zprime(self, s):
        """z'(s) = |d Phi/dz|^{-1}."""
        return 1.0 / self._speed(self.z_of(s))

    def zsecond(self, s):
        """z''(s) = -(1 + R'^2 + (R Theta')^2)^{-2} (R'R'' + R Theta'(R'Theta' + R Theta''))."""
        j = self.curve.jet(self.z_of(s), third=False)
        G = 1.0 + j.dR**2 + (j.R * j.dtheta) ** 2
        P = j.dR * j.d2R + j.R * j.dtheta * (j.dR * j.dtheta + j.R * j.d2theta)
        return -P / G**2

    def point(self, s):
        return self.curve.point(self.z_of(s))

    def local_points(self, s, offsets):
        """Displacements from phi(s) at the given arc-length offsets."""
        return self.curve.local_arc_points(self.z_of(s), offsets)

    @property
    def samples(self):
        return [{"s": float(s), "z": float(z), "point": self.curve.point(z)}
                for s, z in zip(self.s_samples, self.z_samples)]

    @cached_property
    def tables(self):
        return {"s": self.s_samples.copy(), "z": self.z_samples.copy(),
                "zprime": np.array([self.zprime(s) for s in self.s_samples]),
                "zsecond": np.array([self.zsecond(s) for s in self.s_samples])}


def arc_length_reparam(curve: AxisCurve, quad_tol=1e-12) -> ArcCurve:
    return ArcCurve(curve, quad_tol)


def unilateral_check(field: Field, region, t, lattice=(21, 21)) -> dict:
    """Sample v_z on a lattice over ``region = (r_min, r_max, z_min, z_max)``."""
    r_min, r_max, z_min, z_max = map(float, region)
    best = (math.inf, None)
    for r in np.linspace(r_min, r_max, lattice[0]):
        for z in np.linspace(z_min, z_max, lattice[1]):
            vz = field.value(r, z, t)[2]
            if vz < best[0]:
                best = (vz, (float(r), float(z)))
    ok = best[0] > 0
    return {"ok": bool(ok), "witness": None if ok else best[1], "min_v_z": float(best[0])}
