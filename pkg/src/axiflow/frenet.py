"""Frenet-Serret frames along axis-length curves.

Two independent routes are provided.  :func:`frame_explicit` assembles the
frame from R(z), Theta(z) and their z-derivatives; :func:`frame_numeric`
differentiates the embedded 3D curve phi(s) with finite-difference stencils and
never touches the R/Theta tables, so the two can be used to check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, InsufficientSpan, TubeViolation
from .field_core.derivatives import fornberg_weights
from .lagrange import ArcCurve, AxisCurve

KAPPA_FLOOR_FACTOR = 1e-9

FRENET_COLUMNS = ("s", "z", "kappa", "torsion", "ds_kappa", "degenerate", "sigma")


@dataclass(frozen=True)
class FrenetData:
    tau: np.ndarray
    n: np.ndarray
    b: np.ndarray
    kappa: float
    torsion: float
    ds_kappa: float
    degenerate: bool = False
    sigma: int = 1

    @property
    def signed_torsion(self):
        return self.sigma * self.torsion

    def row(self, s, z):
        return {"s": s, "z": z, "kappa": self.kappa, "torsion": self.torsion,
                "ds_kappa": self.ds_kappa, "degenerate": self.degenerate, "sigma": self.sigma}


def kappa_floor(length: float) -> float:
    return KAPPA_FLOOR_FACTOR / max(length, 1e-300)


def _polar_derivs(j):
    """Cartesian Phi', Phi'', Phi''' from the R/Theta jet."""
    c, s = math.cos(j.theta), math.sin(j.theta)
    er = np.array([c, s, 0.0])
    et = np.array([-s, c, 0.0])
    ez = np.array([0.0, 0.0, 1.0])
    R, R1, R2, R3 = j.R, j.dR, j.d2R, j.d3R
    T1, T2, T3 = j.dtheta, j.d2theta, j.d3theta
    d1 = R1 * er + R * T1 * et + ez
    d2 = (R2 - R * T1**2) * er + (2 * R1 * T1 + R * T2) * et
    d3 = None
    if math.isfinite(R3) and math.isfinite(T3):
        d3 = ((R3 - 3 * R1 * T1**2 - 3 * R * T1 * T2) * er
              + (3 * R2 * T1 + 3 * R1 * T2 + R * T3 - R * T1**3) * et)
    return d1, d2, d3, er


def kappa_squared(R, R1, R2, T1, T2):
    """Curvature squared from the three-term form |Phi_zz|^2 z'^4 + 2(Phi_z.Phi_zz) z'^2 z'' + |Phi_z|^2 z''^2."""
    G = 1.0 + R1**2 + (R * T1) ** 2                      # |Phi_z|^2
    Q = (R2 - R * T1**2) ** 2 + (2 * R1 * T1 + R * T2) ** 2   # |Phi_zz|^2
    P = R1 * R2 + R * T1 * (R1 * T1 + R * T2)             # Phi_z . Phi_zz
    zp = G ** -0.5
    zpp = -P / G**2
    return Q * zp**4 + 2 * P * zp**2 * zpp + G * zpp**2


def _complete_frame(tau, hint):
    n = hint - (hint @ tau) * tau
    if np.linalg.norm(n) < 1e-8:
        n = np.cross(tau, [1.0, 0.0, 0.0])
        if np.linalg.norm(n) < 1e-8:
            n = np.cross(tau, [0.0, 1.0, 0.0])
    n = n / np.linalg.norm(n)
    return n, np.cross(tau, n)


def _degenerate(tau, hint, kappa, strict, where):
    if strict:
        raise Degenerate(f"curvature {kappa:.3g} below floor at {where} (straight segment)",
                         kappa=float(kappa))
    n, b = _complete_frame(tau, hint)
    return FrenetData(tau=tau, n=n, b=b, kappa=float(kappa), torsion=0.0, ds_kappa=0.0,
                      degenerate=True, sigma=1)


def _orient(tau, n, kappa, signed_T, ds_kappa):
    sigma = -1 if signed_T < 0 else 1
    b = sigma * np.cross(tau, n)
    return FrenetData(tau=tau, n=n, b=b, kappa=float(kappa), torsion=float(abs(signed_T)),
                      ds_kappa=float(ds_kappa), degenerate=False, sigma=sigma)


def frame_explicit(curve: AxisCurve, z: float, strict=False, floor=None) -> FrenetData:
    """Frame, curvature, torsion and d(kappa)/ds from the R/Theta tables at z.

    With ``strict=True`` a straight point raises :class:`Degenerate`; otherwise a
    degenerate frame is returned with a completed orthonormal (n, b) pair and
    kappa = torsion = d(kappa)/ds = 0 limits.
    """
    j = curve.jet(z, third=True)
    d1, d2, d3, er = _polar_derivs(j)
    G = d1 @ d1
    P = d1 @ d2
    Q = d2 @ d2
    zp = G ** -0.5
    zpp = -P / G**2
    k2 = kappa_squared(j.R, j.dR, j.d2R, j.dtheta, j.d2theta)
    kappa = math.sqrt(max(k2, 0.0))
    tau = d1 * zp
    if floor is None:
        floor = kappa_floor(curve.approx_length)
    if kappa < floor:
        return _degenerate(tau, er, kappa, strict, f"z={z}")
    n = (d2 * zp**2 + d1 * zpp) / kappa
    cr = np.cross(d1, d2)
    if d3 is None:
        signed_T = float("nan")
        ds_kappa = _ds_kappa_differenced(curve, z, floor)
    else:
        signed_T = float(cr @ d3 / (cr @ cr))
        # kappa^2 = Q/G^2 - P^2/G^3 as a function of z; differentiate and divide by 2 kappa |Phi'|
        Gp = 2 * P
        Qp = 2 * (d2 @ d3)
        Pp = Q + d1 @ d3
        dF = Qp / G**2 - 2 * Q * Gp / G**3 - 2 * P * Pp / G**3 + 3 * P**2 * Gp / G**4
        ds_kappa = zp * dF / (2 * kappa)
    return _orient(tau, n, kappa, signed_T, ds_kappa)


def _ds_kappa_differenced(curve, z, floor):
    h = curve.diff_step(z)
    zs = np.array([z - 2 * h, z - h, z, z + h, z + 2 * h])
    if zs[0] < curve.z_start or zs[-1] > curve.z_end:
        raise InsufficientSpan(f"no room to difference kappa at z={z}")
    ks, ss = [], []
    for zz in zs:
        j = curve.jet(float(zz), third=False)
        ks.append(math.sqrt(max(kappa_squared(j.R, j.dR, j.d2R, j.dtheta, j.d2theta), 0.0)))
        ss.append(j.speed)
    w = fornberg_weights(z, zs, 1)
    return float(w @ np.array(ks) / ss[2])


def curvature_explicit(curve: AxisCurve, z: float) -> float:
    j = curve.jet(z, third=False)
    return math.sqrt(max(kappa_squared(j.R, j.dR, j.d2R, j.dtheta, j.d2theta), 0.0))


_OFFSETS = np.arange(-4, 5)


def _stencil(m, k, width):
    """Weights at offsets k-width..k+width (in units of h) for the m-th derivative at k."""
    nodes = np.arange(k - width, k + width + 1, dtype=float)
    return nodes.astype(int), fornberg_weights(float(k), nodes, m)


def frame_numeric(arc: ArcCurve, s: float, h: float = 1e-3, strict=False, floor=None) -> FrenetData:
    """Frame from finite differences of the embedded curve phi(s).

    phi', phi'' use 5-point central stencils, phi''' a 7-point stencil;
    d(kappa)/ds is a 5-point difference of kappa at s + k h, k = -2..2.
    """
    if s - 4 * h < -1e-12 or s + 4 * h > arc.length + 1e-12:
        raise InsufficientSpan(f"s={s} needs a 4h={4 * h:.3g} margin inside [0, {arc.length:.6g}]")
    pts = arc.local_points(s, [float(k * h) for k in _OFFSETS])
    P = {int(k): pts[i] for i, k in enumerate(_OFFSETS)}

    def deriv(m, k, width):
        idx, w = _stencil(m, k, width)
        return sum(wi * P[int(i)] for wi, i in zip(w, idx)) / h**m

    d1 = deriv(1, 0, 2)
    d2 = deriv(2, 0, 2)
    d3 = deriv(3, 0, 3)
    kappas = []
    for k in range(-2, 3):
        a, bb = deriv(1, k, 2), deriv(2, k, 2)
        kappas.append(np.linalg.norm(np.cross(a, bb)) / np.linalg.norm(a) ** 3)
    sp = np.linalg.norm(d1)
    tau = d1 / sp
    cr = np.cross(d1, d2)
    kappa = np.linalg.norm(cr) / sp**3
    if floor is None:
        floor = kappa_floor(arc.length)
    if kappa < floor:
        x = arc.point(s)
        hint = np.array([x[0], x[1], 0.0])
        if np.linalg.norm(hint) == 0:
            hint = np.array([1.0, 0.0, 0.0])
        return _degenerate(tau, hint / np.linalg.norm(hint), kappa, strict, f"s={s}")
    # normal from the component of phi'' orthogonal to tau
    acc = d2 - (d2 @ tau) * tau
    n = acc / np.linalg.norm(acc)
    signed_T = float(cr @ d3 / (cr @ cr))
    ds_kappa = float(fornberg_weights(0.0, np.arange(-2.0, 3.0), 1) @ np.array(kappas) / h)
    return _orient(tau, n, kappa, signed_T, ds_kappa)


def frenet_ode_residuals(arc: ArcCurve, s: float, h: float = 1e-3, step: float = None):
    """Norms of d tau/ds - kappa n, d n/ds + kappa tau - T b, d b/ds + T n from numeric frames."""
    step = step or 10 * h
    frames = [frame_numeric(arc, s + k * step, h) for k in range(-2, 3)]
    w = fornberg_weights(0.0, np.arange(-2.0, 3.0), 1) / step
    c = frames[2]

    def d(attr):
        return sum(wi * getattr(f, attr) for wi, f in zip(w, frames))

    T = c.signed_torsion
    bs = c.b * c.sigma           # right-handed binormal tau x n
    return (float(np.linalg.norm(d("tau") - c.kappa * c.n)),
            float(np.linalg.norm(d("n") + c.kappa * c.tau - T * bs)),
            float(np.linalg.norm(sum(wi * f.b * f.sigma for wi, f in zip(w, frames)) + T * c.n)))


@dataclass(frozen=True)
class FrameMatrices:
    forward: np.ndarray
    inverse: np.ndarray


def moving_frame_matrices(kappa, torsion, r_bar, z_bar) -> FrameMatrices:
    """Coordinate matrices between (d_theta_bar, d_r_bar, d_z_bar) and (tau, n, b).

    x = phi(theta_bar) + r_bar n + z_bar b gives d_theta_bar x = (1 - kappa r_bar) tau
    - z_bar T n + r_bar T b, d_r_bar x = n, d_z_bar x = b.
    """
    a = 1.0 - kappa * r_bar
    if a <= 0:
        raise TubeViolation(f"1 - kappa*r_bar = {a:.3g} <= 0", kappa=kappa, r_bar=r_bar)
    fwd = np.array([[a, -z_bar * torsion, r_bar * torsion],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 1.0]])
    inv = np.array([[1.0 / a, z_bar * torsion / a, -r_bar * torsion / a],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 1.0]])
    return FrameMatrices(forward=fwd, inverse=inv)


def ds_kappa_asymptotic(curve: AxisCurve, z: float, regime: str) -> float:
    """Leading-order d(kappa)/ds near the axis: R Theta' Theta'' (breakdown) or R Theta''' (blowup)."""
    j = curve.jet(z, third=regime == "blowup")
    if regime == "breakdown":
        return j.R * j.dtheta * j.d2theta
    if regime == "blowup":
        return j.R * j.d3theta
    raise ValueError(f"unknown regime {regime!r}")


def frenet_rows(arc: ArcCurve, n_points=21, strict=False):
    """frenet.csv rows on a uniform s grid using the explicit route."""
    rows = []
    for s in np.linspace(0.0, arc.length, n_points):
        z = arc.z_of(float(s))
        f = frame_explicit(arc.curve, z, strict=strict)
        rows.append(f.row(float(s), z))
    return rows
