"""Measurable quantities along trajectories and tube maps.

* material speed derivative D_t|u| = A . tau with A = D_t u;
* residuals of the moving-frame identities
  d_n (A.tau) = 3 kappa D_t|u| + d_s kappa |u|^2 and d_b (A.tau) = T kappa |u|^2;
* disturbance rates L0, Lx, Lt of a tube map;
* near-axis breakdown and blow-up indicators, and the momentum-flux ratio.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import (ConfigError, Degenerate, NotUnilateral, StagnantAxis, StagnantPoint, StepTooLarge,
                     ThirdOrderUnavailable, ZeroFlux)
from .field_core import Field, acceleration_cart, check_point, velocity_cart
from .field_core.ops import acceleration_array
from .frenet import FrenetData, curvature_explicit, frame_explicit
from .lagrange import ArcCurve, axis_length_reparam, integrate_trajectory
from .reconstruct import TubeMap, invert_streamtube
from .taylor import inverse_partials

SPEED_FLOOR_FACTOR = 1e-8
RESIDUAL_COLUMNS = ("s", "z", "t", "kappa", "torsion", "ds_kappa", "speed", "Dt_speed",
                    "res_r", "res_b", "degenerate")
DISTURBANCE_COLUMNS = ("r0_tilde", "z", "t", "L0", "Lx", "Lt")


@dataclass(frozen=True)
class ThresholdConfig:
    beta: float = 1.0
    eps1: float = 1e-2
    eps2: float = 1e-1
    delta: float = 1e-2
    gamma: float = 1e-3
    residual_tol: float = 1e-5
    fd_step: float = 1e-4

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"threshold {k} must be positive, got {v!r}", key=k)
        if not self.eps1 < self.eps2:
            raise ConfigError("eps1 must be smaller than eps2", key="eps1")

    def in_swirl_region(self, field: Field, r, z, t=0.0) -> bool:
        """Membership of D_gamma: |v_theta(x, t)| > gamma."""
        return abs(field.value(r, z, t)[1]) > self.gamma


def speed_floor(field: Field) -> float:
    return SPEED_FLOOR_FACTOR * field.length_scale / field.time_scale


def material_speed_derivative(field: Field, point, tau=None, theta=0.0) -> float:
    """D_t|u| at ``point = (r, z, t)`` as A . tau (tau defaults to u/|u|)."""
    r, z, t = point
    check_point(field, r, z, t)
    v = field.value(r, z, t)
    sp = float(np.linalg.norm(v))
    if sp <= speed_floor(field):
        raise StagnantPoint(f"|u| = {sp:.3g} below speed floor", r=r, z=z, t=t)
    A = acceleration_array(field, r, z, t)
    if tau is None:
        return float(v @ A / sp)
    c, s = math.cos(theta), math.sin(theta)
    A_cart = np.array([A[0] * c - A[1] * s, A[0] * s + A[1] * c, A[2]])
    return float(A_cart @ np.asarray(tau, dtype=float))


def speed_derivative_quotient(field: Field, r, z, t) -> float:
    """(D_t v_r v_r + D_t v_theta v_theta + D_t v_z v_z)/|u| with material component derivatives."""
    d = {o: field.partial(r, z, t, o) for o in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))}
    v = d[(0, 0, 0)]
    Dv = d[(0, 0, 1)] + v[0] * d[(1, 0, 0)] + v[2] * d[(0, 1, 0)]
    return float(v @ Dv / np.linalg.norm(v))


@dataclass(frozen=True)
class ResidualRecord:
    s: float
    z: float
    t: float
    kappa: float
    torsion: float
    ds_kappa: float
    speed: float
    Dt_speed: float
    res_r: float
    res_b: float
    degenerate: bool = False
    unsteady_r: float = 0.0
    unsteady_b: float = 0.0
    convention: str = "frozen"

    @property
    def scale(self):
        u2 = self.speed**2
        return max(1.0, self.kappa * u2, abs(self.ds_kappa) * u2)

    @property
    def corrected_r(self):
        """res_r with the time-derivative term -(d_t A . n)/|u| removed."""
        return self.res_r - self.unsteady_r

    @property
    def corrected_b(self):
        return self.res_b - self.unsteady_b

    def row(self):
        return {k: getattr(self, k) for k in RESIDUAL_COLUMNS}


def _richardson_central(F, h):
    d1 = (F(h) - F(-h)) / (2 * h)
    d2 = (F(h / 2) - F(-h / 2)) / h
    return (4 * d2 - d1) / 3


def frame_residuals(field: Field, traj_point, frame: FrenetData, speed=None, fd_step=None,
                    convention="frozen", s=float("nan"), strict=False) -> ResidualRecord:
    """Residuals of the moving-frame identities at a trajectory point.

    ``traj_point = (x, t)`` with Cartesian x.  In the frozen convention the
    directional derivatives act on x -> A(x, t) . tau0 with tau0 the frame's
    tangent; in the "physical" convention on x -> A(x, t) . u(x, t)/|u(x, t)|.
    Degenerate frames use the straight-line limits kappa = T = d_s kappa = 0 with
    the completed (n, b) pair unless ``strict``.
    """
    x, t = traj_point
    x = np.asarray(x, dtype=float)
    if frame.degenerate and strict:
        raise Degenerate("frame is degenerate")
    kappa = 0.0 if frame.degenerate else frame.kappa
    T = 0.0 if frame.degenerate else frame.torsion
    dsk = 0.0 if frame.degenerate else frame.ds_kappa
    u = velocity_cart(field, x, t)
    if speed is None:
        speed = float(np.linalg.norm(u))
    if speed <= speed_floor(field):
        raise StagnantPoint(f"|u| = {speed:.3g} below speed floor")
    if fd_step is None:
        radius = 1.0 / kappa if kappa > 0 else math.inf
        fd_step = 1e-4 * min(radius, field.length_scale)
    if 1.0 - kappa * fd_step <= 0.5:
        raise StepTooLarge(f"1 - kappa*fd_step = {1 - kappa * fd_step:.3g} <= 0.5", fd_step=fd_step)
    tau = frame.tau
    A0 = acceleration_cart(field, x, t)
    Dt = float(A0 @ tau)

    if convention == "frozen":
        def F(y):
            return acceleration_cart(field, y, t) @ tau
    elif convention == "physical":
        def F(y):
            uu = velocity_cart(field, y, t)
            return acceleration_cart(field, y, t) @ (uu / np.linalg.norm(uu))
    else:
        raise ValueError(f"unknown convention {convention!r}")

    dn = _richardson_central(lambda e: F(x + e * frame.n), fd_step)
    db = _richardson_central(lambda e: F(x + e * frame.b), fd_step)
    res_r = dn - 3 * kappa * Dt - dsk * speed**2
    res_b = db - T * kappa * speed**2
    # time-derivative correction for unsteady flows, -(d_t A . d)/|u|
    ht = 1e-4 * field.time_scale
    lo, hi = field.domain.t_min, field.domain.t_max
    if field.steady or not (lo <= t - ht and t + ht <= hi):
        dA = np.zeros(3) if field.steady else _one_sided_dt(field, x, t, ht)
    else:
        dA = _richardson_central(lambda e: acceleration_cart(field, x, t + e), ht)
    return ResidualRecord(s=float(s), z=float(x[2]), t=float(t), kappa=float(kappa),
                          torsion=float(T), ds_kappa=float(dsk), speed=float(speed),
                          Dt_speed=Dt, res_r=float(res_r), res_b=float(res_b),
                          degenerate=bool(frame.degenerate),
                          unsteady_r=float(-(dA @ frame.n) / speed),
                          unsteady_b=float(-(dA @ frame.b) / speed), convention=convention)


def _one_sided_dt(field, x, t, h):
    sgn = 1.0 if t + 2 * h <= field.domain.t_max else -1.0
    f = [acceleration_cart(field, x, t + sgn * k * h) for k in range(3)]
    return sgn * (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)


def residuals_along(field: Field, arc: ArcCurve, n_points=10, fd_step=None, margin=0.05,
                    convention="frozen"):
    """Residual records at ``n_points`` arc-length stations (trajectory curves carry their time)."""
    L = arc.length
    out = []
    for s in np.linspace(margin * L, (1 - margin) * L, n_points):
        z = arc.z_of(float(s))
        frame = frame_explicit(arc.curve, z)
        R, th, t = arc.curve.state(z)
        if not math.isfinite(t):
            raise ValueError("residuals need a time-stamped curve")
        x = np.array([R * math.cos(th), R * math.sin(th), z])
        out.append(frame_residuals(field, (x, t), frame, fd_step=fd_step, s=float(s),
                                   convention=convention))
    return out


# ---------------------------------------------------------------------------
# disturbance rates

LX_INDICES = [(j, k) for j in range(4) for k in range(4) if 1 <= j + k <= 3 and (j, k) != (0, 1)]
LT_MAP_INDICES = [(i, j, k) for i in (1, 2) for j in range(3) for k in range(3) if 2 <= i + j + k <= 3]
LT_INV_INDICES = [(i, j, k) for i in (1, 2) for j in range(2) for k in range(2) if 1 <= i + j + k <= 2]


@dataclass(frozen=True)
class DisturbanceRates:
    L0: float
    Lx: float
    Lt: float
    r0_tilde: float
    z: float
    t: float
    length_scale: float = 1.0
    time_scale: float = 1.0
    terms: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def row(self):
        return {k: getattr(self, k) for k in DISTURBANCE_COLUMNS}


def disturbance_rates(tube: TubeMap, r0_tilde, z, t, nondimensional=True) -> DisturbanceRates:
    """L0, Lx, Lt at (r0_tilde, z, t); inverse-map partials by Taylor inversion."""
    F = tube.jet(r0_tilde, z, t, max_order=3, max_t=2)
    if F[(1, 0, 0)] <= 0:
        from .errors import DegenerateTube
        raise DegenerateTube(f"d_a R~ = {F[(1, 0, 0)]:.3g} <= 0", r0_tilde=r0_tilde, z=z, t=t)
    S = inverse_partials(F, deg=3)
    Ls = tube.length_scale if nondimensional else 1.0
    Ts = tube.time_scale if nondimensional else 1.0

    def nd(i, j, k):
        return Ls ** (j + k - 1) * Ts**i

    L0 = abs(F[(1, 0, 0)]) + abs(S[(1, 0, 0)])
    terms = {}
    for j, k in LX_INDICES:
        terms[("map", 0, j, k)] = abs(F[(k, j, 0)]) * nd(0, j, k)
        terms[("inv", 0, j, k)] = abs(S[(k, j, 0)]) * nd(0, j, k)
    Lx = sum(terms.values())
    tt = {}
    for i, j, k in LT_MAP_INDICES:
        tt[("map", i, j, k)] = abs(F[(k, j, i)]) * nd(i, j, k)
    for i, j, k in LT_INV_INDICES:
        tt[("inv", i, j, k)] = abs(S[(k, j, i)]) * nd(i, j, k)
    terms.update(tt)
    return DisturbanceRates(L0=float(L0), Lx=float(Lx), Lt=float(sum(tt.values())),
                            r0_tilde=float(r0_tilde), z=float(z), t=float(t),
                            length_scale=Ls, time_scale=Ts, terms=terms)


# ---------------------------------------------------------------------------
# near-axis indicators

def _axis_curve_through(field, r, z, t, third=False):
    span = 0.25 * field.time_scale
    t_hi = min(t + span, field.domain.t_max)
    traj = integrate_trajectory(field, r, 0.0, z, (t, t_hi), ode_tol=1e-12)
    return axis_length_reparam(traj, field)


def near_axis_breakdown_indicator(field: Field, z, t, probe_h=1e-3) -> dict:
    check_point(field, 0.0, z, t)
    vz = field.value(0.0, z, t)[2]
    if vz <= speed_floor(field):
        raise StagnantAxis(f"v_z(0, z, t) = {vz:.3g} at z={z}", z=z, t=t)
    theta_prime = float(field.partial(0.0, z, t, (1, 0, 0))[1] / vz)
    curve = _axis_curve_through(field, probe_h, z, t)
    kappa = curvature_explicit(curve, curve.z_start)
    curvature_ratio = kappa / probe_h

    def dts(r):
        v = field.value(r, z, t)
        return float(acceleration_array(field, r, z, t) @ v / np.linalg.norm(v))

    d2 = (dts(2 * probe_h) - 2 * dts(probe_h) + dts(0.0)) / probe_h**2
    if theta_prime == 0.0:
        status, match = "degenerate", None
    elif abs(d2) < 1e-12 * max(1.0, theta_prime**2):
        status, match = "trivial", 0.0
    else:
        status, match = "ok", d2 / theta_prime**2
    return {"z": float(z), "t": float(t), "probe_h": probe_h,
            "theta_prime_axis": theta_prime, "curvature_ratio": float(curvature_ratio),
            "d2_Dt_speed": float(d2), "match_ratio": match, "status": status}


def blowup_indicator(field: Field, z, t, probe_h=1e-3, floor=1e-12) -> dict:
    check_point(field, 0.0, z, t)
    if field.max_order < 3:
        raise ThirdOrderUnavailable(f"{field.kind} lacks third derivatives")
    d_zr = abs(field.partial(0.0, z, t, (1, 1, 0))[1])
    d_zrr = abs(field.partial(0.0, z, t, (2, 1, 0))[1])
    curve = _axis_curve_through(field, probe_h, z, t)
    j = curve.jet(curve.z_start, third=True)
    blow = abs(j.R * j.d3theta)
    brk = abs(j.R * j.dtheta * j.d2theta)
    return {"z": float(z), "t": float(t), "probe_h": probe_h,
            "theta_ppp_axis_proxy": float(j.d3theta), "swirl_mix_d_zr": float(d_zr),
            "swirl_mix_d_zrr": float(d_zrr), "dominance": float(blow / (brk + floor)),
            "regime": "none" if max(blow, brk) <= floor else ("blowup" if blow > brk else "breakdown")}


# ---------------------------------------------------------------------------
# pulsatile monitoring

def pulsatile_monitor(field: Field, seeds, t_grid, map_builder, thresholds=None, dt_nodes=None,
                      threads=1, t0=None) -> list:
    """Track trajectories and report max L-rates and residuals per monitored time.

    ``map_builder(t_nodes)`` returns a tube map covering the seeds' z range;
    ``seeds`` are (r0, z0) released at ``t0`` (default the first monitored time).
    """
    t_grid = [float(t) for t in t_grid]
    t0 = t_grid[0] if t0 is None else t0
    if thresholds is not None:
        seeds = [s for s in seeds if thresholds.in_swirl_region(field, s[0], s[1], t0)] or seeds
    trajs = [integrate_trajectory(field, r0, 0.0, z0, (t0, max(t_grid[-1], t0) + 1e-9), 1e-11)
             for r0, z0 in seeds]
    dt_nodes = dt_nodes or 0.05 * field.time_scale
    curves = []
    for tr in trajs:
        try:
            curves.append(axis_length_reparam(tr, field))
        except NotUnilateral:
            curves.append(None)

    def residual_max(curve, tr, t):
        if curve is None:
            return 0.0
        z = tr.at(t)[2]
        R, th, _ = curve.state(z)
        x = np.array([R * math.cos(th), R * math.sin(th), z])
        rec = frame_residuals(field, (x, t), frame_explicit(curve, z))
        return max(abs(rec.res_r), abs(rec.res_b))

    def one(t):
        nodes = [t] if field.steady else [t + k * dt_nodes for k in range(-2, 3)]
        tube = map_builder(nodes)
        best = {"t": t, "max_L0": 0.0, "max_Lx": 0.0, "max_Lt": 0.0, "max_abs_res": 0.0,
                "n_points": 0}
        for tr, curve in zip(trajs, curves):
            if t > tr.t_end:
                continue
            R, _, Z = tr.at(t)
            a = invert_streamtube(tube, R, Z, t)
            rates = disturbance_rates(tube, a, Z, t)
            best["max_L0"] = max(best["max_L0"], rates.L0)
            best["max_Lx"] = max(best["max_Lx"], rates.Lx)
            best["max_Lt"] = max(best["max_Lt"], rates.Lt)
            best["max_abs_res"] = max(best["max_abs_res"], residual_max(curve, tr, t))
            best["n_points"] += 1
        return best

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, t_grid))
    return [one(t) for t in t_grid]


# ---------------------------------------------------------------------------

def momentum_flux_ratio(field: Field, z, t, quad_tol=1e-10, radius=None) -> float:
    """a = int v_z^2 dA / (int v_z dA)^2 over the disc of the given radius."""
    R = radius if radius is not None else field.domain.r_max
    if R is None:
        raise ValueError("cross-section radius required for unbounded fields")
    check_point(field, 0.0, z, t)
    check_point(field, R, z, t)
    num, _ = quad(lambda r: field.value(r, z, t)[2] ** 2 * r, 0.0, R, epsabs=quad_tol * 1e-3,
                  epsrel=quad_tol * 1e-3, limit=200)
    den, _ = quad(lambda r: field.value(r, z, t)[2] * r, 0.0, R, epsabs=quad_tol * 1e-3,
                  epsrel=quad_tol * 1e-3, limit=200)
    num *= 2 * math.pi
    den *= 2 * math.pi
    if abs(den) < 1e-14 * R**2 * field.length_scale / field.time_scale:
        raise ZeroFlux(f"flux {den:.3g} below floor", z=z, t=t)
    return float(num / den**2)
