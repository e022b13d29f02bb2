"""Stream-tube maps, inflow propagation and velocity reconstruction.

The tube map R~(a, z, t) gives the radius at height z of the frozen-time
streamline that enters the inlet plane z_in at radius a.  Partials in z come
from the streamline ODE by the chain rule (third order by differencing along
z); partials in a and t come from Fornberg weights across neighbouring seeds.
R~ is odd in a, so seeds are mirrored through the axis and the a-stencils stay
centred even at a = 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (DegenerateTube, InsufficientSpan, NonMonotone, OutsideTubeRange,
                     SeedSpacingTooCoarse)
from .field_core import Field, check_point, on_axis
from .field_core.derivatives import fornberg_weights
from .lagrange import DEFAULT_ODE_TOL, integrate_streamline, integrate_trajectory
from .io import write_csv

MAP_ODE_TOL = 1e-12
STREAMTUBE_COLUMNS = ("r0_tilde", "z", "t", "R", "dR_dr0", "dR_dz", "rho")
A_STENCIL = 7
T_STENCIL = 5


def clustered_nodes(r_max, n=41, power=2.0):
    """Inlet radii clustered towards the axis: r_max (k/(n-1))^power."""
    k = np.arange(n) / (n - 1)
    return r_max * k**power


def _nearest(nodes, x, width):
    width = min(width, len(nodes))
    i = int(np.searchsorted(nodes, x))
    lo = int(np.clip(i - width // 2, 0, len(nodes) - width))
    return slice(lo, lo + width)


class TubeMap:
    """Common interface of tube maps: ``partial(a, z, t, da, dz, dt)``."""

    r0_max: float
    z_in: float
    steady: bool
    length_scale = 1.0
    time_scale = 1.0

    def partial(self, a, z, t, da=0, dz=0, dt=0) -> float:
        raise NotImplementedError

    def R(self, a, z, t):
        return self.partial(a, z, t)

    def r_max(self, z, t):
        return self.partial(self.r0_max, z, t)

    def jet(self, a, z, t, max_order=3, max_t=2):
        """All partials with total order <= max_order and t-order <= max_t, keyed (da, dz, dt)."""
        out = {}
        for da in range(max_order + 1):
            for dz in range(max_order + 1 - da):
                for dt in range(min(max_t, max_order - da - dz) + 1):
                    if dt and self.steady:
                        out[(da, dz, dt)] = 0.0
                    else:
                        out[(da, dz, dt)] = self.partial(a, z, t, da, dz, dt)
        return out

    def rows(self, z_values, t_values=None, a_values=None):
        t_values = self.default_t_values() if t_values is None else t_values
        a_values = self.default_a_values() if a_values is None else a_values
        rows = []
        for t in t_values:
            for z in z_values:
                for a in a_values:
                    rows.append({"r0_tilde": float(a), "z": float(z), "t": float(t),
                                 "R": self.partial(a, z, t), "dR_dr0": self.partial(a, z, t, 1),
                                 "dR_dz": self.partial(a, z, t, 0, 1),
                                 "rho": inflow_propagation(self, a, z, t)})
        return rows

    def default_t_values(self):
        return [0.0]

    def default_a_values(self):
        return np.linspace(0.0, self.r0_max, 11)


class SyntheticTubeMap(TubeMap):
    """Tube map with closed-form partials ``fn(a, z, t, da, dz, dt)``."""

    def __init__(self, fn, r0_max=1.0, z_in=0.0, steady=False, length_scale=1.0, time_scale=1.0,
                 name="synthetic"):
        self.fn = fn
        self.r0_max = float(r0_max)
        self.z_in = float(z_in)
        self.steady = steady
        self.length_scale = length_scale
        self.time_scale = time_scale
        self.name = name

    def partial(self, a, z, t, da=0, dz=0, dt=0):
        if dt and self.steady:
            return 0.0
        return float(self.fn(a, z, t, da, dz, dt))


class StreamTubeMap(TubeMap):
    """Tube map of a field built from one streamline per (inlet radius, time node)."""

    def __init__(self, field: Field, r0_nodes, z_span, t_nodes, ode_tol=MAP_ODE_TOL, threads=1,
                 U_ref=None):
        r0 = np.asarray(r0_nodes, dtype=float)
        if r0[0] != 0.0 or np.any(np.diff(r0) <= 0):
            raise ValueError("r0_nodes must be strictly increasing and start at 0")
        if len(r0) < 4:
            raise InsufficientSpan("need at least 4 inlet radii")
        self.field = field
        self.r0_nodes = r0
        self.r0_max = float(r0[-1])
        self.z_span = tuple(map(float, z_span))
        self.z_in = self.z_span[0]
        self.t_nodes = np.atleast_1d(np.asarray(t_nodes, dtype=float))
        self.steady = bool(field.steady)
        if not self.steady and len(self.t_nodes) < 3:
            raise InsufficientSpan("unsteady fields need at least 3 time nodes for t-partials")
        self.ode_tol = ode_tol
        self.length_scale = field.length_scale
        seeds = [(it, ia) for it in range(len(self.t_nodes)) for ia in range(len(r0))]

        def build(seed):
            it, ia = seed
            return integrate_streamline(field, r0[ia], self.t_nodes[it], self.z_span, ode_tol)

        if threads and threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                curves = list(pool.map(build, seeds))
        else:
            curves = [build(s) for s in seeds]
        self.curves = dict(zip(seeds, curves))
        self.a_ext = np.concatenate([-r0[:0:-1], r0])
        self.U_ref = U_ref if U_ref is not None else self._inlet_mean_speed()
        self.time_scale = self.length_scale / self.U_ref
        self._check_monotone()

    def _inlet_mean_speed(self):
        t = self.t_nodes[0]
        R = self.r0_max
        val, _ = quad(lambda r: self.field.value(r, self.z_in, t)[2] * r, 0.0, R)
        return 2.0 * val / R**2

    def _check_monotone(self):
        zs = np.linspace(*self.z_span, 11)
        for it in range(len(self.t_nodes)):
            for z in zs:
                vals = [self.curves[(it, ia)].state(z)[0] for ia in range(len(self.r0_nodes))]
                d = np.diff(vals)
                if np.any(d <= 0):
                    k = int(np.argmin(d))
                    raise SeedSpacingTooCoarse(
                        f"tube radii not increasing between seeds {k} and {k + 1} at z={z:.6g}",
                        z=float(z), t=float(self.t_nodes[it]))

    def default_t_values(self):
        return list(self.t_nodes)

    def default_a_values(self):
        return list(self.r0_nodes)

    # z-jet of one seed curve ------------------------------------------------
    @lru_cache(maxsize=65536)
    def _zjet(self, ia, it, z, p):
        curve = self.curves[(it, ia)]
        if p == 0:
            return curve.state(z)[0]
        if p in (1, 2):
            return curve._order2(z, curve.state(z))[p - 1]
        if p == 3:
            h = 1e-2 * self.length_scale
            z0, z1 = self.z_span
            k = np.arange(-2, 3)
            nodes = z + h * k
            if nodes[0] < z0:
                nodes = z0 + h * np.arange(5) if z - z0 < h else nodes - (nodes[0] - z0)
            if nodes[-1] > z1:
                nodes = nodes - (nodes[-1] - z1)
            w = fornberg_weights(z, nodes, 1)
            return float(sum(wi * self._zjet(ia, it, float(zz), 2) for wi, zz in zip(w, nodes)))
        raise ValueError("z-order above 3 not tabulated")

    def _seed_value(self, ja, it, z, p):
        """Value at extended node ja (negative radii mirrored, R~ odd in a)."""
        n = len(self.r0_nodes)
        ia = ja - (n - 1)
        if ia >= 0:
            return self._zjet(ia, it, z, p)
        return -self._zjet(-ia, it, z, p)

    def partial(self, a, z, t, da=0, dz=0, dt=0):
        if not (self.z_span[0] - 1e-12 <= z <= self.z_span[1] + 1e-12):
            raise OutsideTubeRange(f"z={z} outside map span {self.z_span}")
        z = min(max(z, self.z_span[0]), self.z_span[1])
        if dt and self.steady:
            return 0.0
        if self.steady:
            t_idx, wt = [0], np.array([1.0])
        else:
            sl = _nearest(self.t_nodes, t, T_STENCIL)
            t_idx = list(range(sl.start, sl.stop))
            wt = fornberg_weights(t, self.t_nodes[sl], dt)
        sa = _nearest(self.a_ext, a, A_STENCIL)
        wa = fornberg_weights(a, self.a_ext[sa], da)
        total = 0.0
        for it, w1 in zip(t_idx, wt):
            for ja, w2 in zip(range(sa.start, sa.stop), wa):
                total += w1 * w2 * self._seed_value(ja, it, float(z), dz)
        return float(total)


def build_streamtube_map(field: Field, r0_nodes, z_span, t_nodes, ode_tol=MAP_ODE_TOL,
                         threads=1) -> StreamTubeMap:
    return StreamTubeMap(field, r0_nodes, z_span, t_nodes, ode_tol=ode_tol, threads=threads)


def write_streamtube(path, tube: TubeMap, z_values, t_values=None, a_values=None):
    write_csv(path, STREAMTUBE_COLUMNS, tube.rows(z_values, t_values, a_values))


def _axis(tube, a):
    return abs(a) < 1e-8 * tube.length_scale


def inflow_propagation(tube: TubeMap, r0_tilde, z, t) -> float:
    """rho = 2 a / d_a(R~^2); on the axis 1/(d_a R~)^2."""
    Ra = tube.partial(r0_tilde, z, t, 1)
    if _axis(tube, r0_tilde):
        if Ra <= 0:
            raise DegenerateTube(f"d_a R~ = {Ra:.3g} <= 0 on the axis")
        return 1.0 / Ra**2
    denom = 2.0 * tube.partial(r0_tilde, z, t) * Ra
    if denom <= 0:
        raise DegenerateTube(f"d_a(R~^2) = {denom:.3g} <= 0 at a={r0_tilde}")
    return 2.0 * r0_tilde / denom


def invert_streamtube(tube: TubeMap, r, z, t) -> float:
    """Inlet radius a with R~(a, z, t) = r (bracketed root, Newton polish)."""
    if r == 0.0:
        return 0.0
    top = tube.r_max(z, t)
    if r < 0 or r > top * (1 + 1e-12):
        raise OutsideTubeRange(f"r={r} outside tube range [0, {top:.6g}] at z={z}", r=r, z=z)
    if r >= top:
        return tube.r0_max
    f = lambda a: tube.partial(a, z, t) - r
    a = brentq(f, 0.0, tube.r0_max, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(3):
        Ra = tube.partial(a, z, t, 1)
        if Ra <= 0:
            raise NonMonotone(f"d_a R~ = {Ra:.3g} <= 0 at a={a}", a=a, z=z)
        step = f(a) / Ra
        a -= step
        if abs(step) < 1e-16 * max(1.0, abs(a)):
            break
    return float(a)


def inlet_trace(field: Field, z_in):
    """U_in(a, t) = v_z(a, z_in, t)."""
    return lambda a, t: field.value(a, z_in, t)[2]


def reconstruct_velocity(tube: TubeMap, U_in, r, z, t) -> dict:
    """v_z = rho(a) U_in(a, t), v_r = d_z R~(a) v_z with a = R~^{-1}(r, z, t)."""
    a = invert_streamtube(tube, r, z, t)
    vz = inflow_propagation(tube, a, z, t) * U_in(a, t)
    vr = tube.partial(a, z, t, 0, 1) * vz
    return {"v_z": float(vz), "v_r": float(vr), "r0_tilde": a}


def _radial_rate(field, r, z, t):
    """v_r / r, with the axis limit d_r v_r."""
    if on_axis(field, r):
        return field.partial(0.0, z, t, (1, 0, 0))[0]
    return field.value(r, z, t)[0] / r


def _exponent(field, traj, t0, t1, tol):
    def integrand(s):
        R, _, Z = traj.dense(s)
        return -_radial_rate(field, max(R, 0.0) if traj.seed[0] > 0 else 0.0, Z, s)

    if t1 == t0:
        return 0.0
    val, _ = quad(integrand, t0, t1, epsabs=tol, epsrel=tol, limit=200)
    return val


def vtheta_gronwall(field: Field, r0, z0, t, ode_tol=DEFAULT_ODE_TOL, t0=0.0) -> float:
    """Swirl carried along a trajectory: v_theta(r0, z0, t0) exp(-int v_r/R* dt)."""
    check_point(field, r0, z0, t0)
    if t == t0:
        return float(field.value(r0, z0, t0)[1])
    traj = integrate_trajectory(field, r0, 0.0, z0, (t0, t), ode_tol)
    if traj.left_domain:
        from .errors import LeftDomain
        raise LeftDomain(traj.message, partial=traj)
    return float(field.value(r0, z0, t0)[1] * math.exp(_exponent(field, traj, t0, t, ode_tol)))


@dataclass(frozen=True)
class Deformation2D:
    t: float
    dR_dr0: float
    dR_dz0: float
    dZ_dr0: float
    dZ_dz0: float
    det: float
    det_law: float

    @property
    def matrix(self):
        return np.array([[self.dR_dr0, self.dR_dz0], [self.dZ_dr0, self.dZ_dz0]])


def deformation_2d(field: Field, r0, z0, t, ode_tol=DEFAULT_ODE_TOL, t0=0.0) -> Deformation2D:
    """Meridian deformation from the variational equations along the trajectory.

    ``det_law`` is the independent exponential law det = exp(-int v_r/R* dt).
    """
    from scipy.integrate import solve_ivp
    from .errors import LeftDomain, StiffnessFailure

    check_point(field, r0, z0, t0)
    if t == t0:
        return Deformation2D(t, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    axis = r0 == 0.0

    def rhs(s, y):
        R, Z = (0.0 if axis else y[0]), y[1]
        v = field.value(R, Z, s)
        dr = field.partial(R, Z, s, (1, 0, 0))
        dz = field.partial(R, Z, s, (0, 1, 0))
        Jf = np.array([[dr[0], dz[0]], [dr[2], dz[2]]])
        M = y[2:].reshape(2, 2)
        return [0.0 if axis else v[0], v[2], *(Jf @ M).ravel()]

    def leave(s, y):
        return field.domain.margin(y[0], y[1], s)
    leave.terminal = True

    sol = solve_ivp(rhs, (t0, t), [r0, z0, 1.0, 0.0, 0.0, 1.0], method="RK45", rtol=ode_tol,
                    atol=ode_tol, dense_output=True, events=leave)
    if sol.status == -1:
        raise StiffnessFailure(sol.message)
    if sol.status == 1:
        raise LeftDomain(f"left domain at t={sol.t[-1]:.6g}")
    traj = integrate_trajectory(field, r0, 0.0, z0, (t0, t), ode_tol)
    M = sol.y[2:, -1].reshape(2, 2)
    law = math.exp(_exponent(field, traj, t0, t, ode_tol))
    return Deformation2D(t=float(t), dR_dr0=float(M[0, 0]), dR_dz0=float(M[0, 1]),
                         dZ_dr0=float(M[1, 0]), dZ_dz0=float(M[1, 1]),
                         det=float(np.linalg.det(M)), det_law=law)
