"""Analytic axisymmetric velocity fields.

Every field exposes ``partial(r, z, t, order)`` returning the derivative of
(v_r, v_theta, v_z) with multi-index ``order = (n_r, n_z, n_t)`` as a length-3
array, without domain checks; the public operations in :mod:`.ops` check.
Formulas stay valid for r < 0 with the axis parity (v_r, v_theta odd, v_z even)
so centred stencils may straddle the axis.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bessel import j0_difference, j0_radial_derivative
from .derivatives import fd_partial
from .types import Domain
from .waveforms import (PolyProfile, Profile, Waveform, as_profile, as_waveform,
                        Constant)

ZERO3 = np.zeros(3)


class Field:
    """Base class of all velocity fields."""

    kind = "field"
    euler = True            # exact incompressible Euler solution
    max_order = 3           # highest total spatial derivative order available
    citation = ""

    @property
    def steady(self) -> bool:
        return False

    @property
    def domain(self) -> Domain:
        return Domain()

    @property
    def length_scale(self) -> float:
        r = self.domain.r_max
        return r if r else 1.0

    @property
    def time_scale(self) -> float:
        return 1.0

    def partial(self, r, z, t, order=(0, 0, 0)) -> np.ndarray:
        raise NotImplementedError

    def value(self, r, z, t) -> np.ndarray:
        return self.partial(r, z, t, (0, 0, 0))

    def params(self) -> dict:
        return {}

    def formula(self) -> str:
        return ""

    def describe(self) -> str:
        lines = [f"{self.kind}: {self.formula()}"]
        if self.citation:
            lines.append(f"  reference: {self.citation}")
        p = self.params()
        if p:
            lines.append("  parameters: " + ", ".join(f"{k}={v}" for k, v in p.items()))
        lines.append(f"  exact Euler solution: {'yes' if self.euler else 'no'}")
        return "\n".join(lines)


@dataclass(frozen=True)
class StraightTube(Field):
    g: Waveform = field(default_factory=Constant)
    radius: float = 1.0
    kind = "StraightTube"
    citation = "uniform unsteady plug flow u = (0, 0, g(t)); straight stream tubes"

    def __post_init__(self):
        object.__setattr__(self, "g", as_waveform(self.g))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def steady(self):
        return isinstance(self.g, Constant)

    @property
    def domain(self):
        return Domain(r_max=self.radius)

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        if i or j:
            return ZERO3.copy()
        return np.array([0.0, 0.0, self.g.derivative(t, k)])

    def params(self):
        return {"g": self.g.params(), "radius": self.radius}

    def formula(self):
        return "v_r = 0, v_theta = 0, v_z = g(t)"


@dataclass(frozen=True)
class ShearFlow(Field):
    f: Profile = field(default_factory=PolyProfile)
    radius: float = 1.0
    kind = "ShearFlow"
    citation = "steady parallel shear u = (0, 0, f(r)) with constant pressure"

    def __post_init__(self):
        object.__setattr__(self, "f", as_profile(self.f))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def steady(self):
        return True

    @property
    def domain(self):
        return Domain(r_max=self.radius)

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        if j or k:
            return ZERO3.copy()
        return np.array([0.0, 0.0, self.f.derivative(r, i)])

    def params(self):
        return {"f": self.f.params(), "radius": self.radius}

    def formula(self):
        return "v_r = 0, v_theta = 0, v_z = f(r)"


@dataclass(frozen=True)
class RigidHelixFlow(Field):
    omega: float = 2.0
    W: float = 1.0
    kind = "RigidHelixFlow"
    citation = "rigid rotation plus uniform axial translation; helical particle paths"

    @property
    def steady(self):
        return True

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        if j or k:
            return ZERO3.copy()
        if i == 0:
            return np.array([0.0, self.omega * r, self.W])
        if i == 1:
            return np.array([0.0, self.omega, 0.0])
        return ZERO3.copy()

    def params(self):
        return {"omega": self.omega, "W": self.W}

    def formula(self):
        return "v_r = 0, v_theta = omega r, v_z = W"


@dataclass(frozen=True)
class StagnationSwirl(Field):
    """Axisymmetric stagnation-point flow carrying a rigidly rotating core.

    v_r = -a(t) r/2, v_z = a(t) z + drift, v_theta = omega0 exp(int_0^t a) r
    with a(t) = alpha * m(t) for an optional modulation waveform m (default 1).
    Exact unsteady Euler solution for any modulation and drift.
    """
    alpha: float = 1.0
    omega0: float = 1.0
    drift: float = 0.0
    modulation: Optional[Waveform] = None
    kind = "StagnationSwirl"
    citation = "stagnation-point strain with swirl, v_theta amplified by vortex stretching"

    def __post_init__(self):
        if self.modulation is not None:
            object.__setattr__(self, "modulation", as_waveform(self.modulation))

    @property
    def steady(self):
        return self.modulation is None and self.omega0 == 0.0

    def _a(self, t, n=0):
        if self.modulation is None:
            return self.alpha if n == 0 else 0.0
        return self.alpha * self.modulation.derivative(t, n)

    def _omega(self, t, n=0):
        # omega(t) = omega0 exp(E(t)), E' = a(t)
        if self.modulation is None:
            return self.omega0 * self.alpha**n * math.exp(self.alpha * t)
        E = self.alpha * self.modulation.integral(t)
        w = self.omega0 * math.exp(E)
        if n == 0:
            return w
        a0, a1 = self._a(t), self._a(t, 1)
        if n == 1:
            return w * a0
        if n == 2:
            return w * (a1 + a0 * a0)
        a2 = self._a(t, 2)
        if n == 3:
            return w * (a2 + 3 * a0 * a1 + a0**3)
        raise ValueError("time derivatives above order 3 unsupported")

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        out = np.zeros(3)
        # v_r
        if j == 0 and i <= 1:
            out[0] = -0.5 * self._a(t, k) * (r if i == 0 else 1.0)
        # v_theta
        if j == 0 and i <= 1:
            out[1] = self._omega(t, k) * (r if i == 0 else 1.0)
        # v_z
        if i == 0:
            if j == 0:
                out[2] = self._a(t, k) * z + (self.drift if k == 0 else 0.0)
            elif j == 1:
                out[2] = self._a(t, k)
        return out

    def params(self):
        p = {"alpha": self.alpha, "omega0": self.omega0}
        if self.drift:
            p["drift"] = self.drift
        if self.modulation is not None:
            p["modulation"] = self.modulation.params()
        return p

    def formula(self):
        return ("v_r = -alpha r/2, v_theta = omega0 exp(alpha t) r, v_z = alpha z"
                + (" + drift" if self.drift else ""))


@dataclass(frozen=True)
class Poiseuille(Field):
    p_s: float = 4.0
    nu: float = 1.0
    ell: float = 1.0
    radius: float = 1.0
    kind = "Poiseuille"
    euler = False
    citation = "stationary Navier-Stokes pipe flow (Poiseuille), profile p_s/(4 nu ell) (R^2 - r^2)"

    def __post_init__(self):
        for name in ("nu", "ell", "radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def steady(self):
        return True

    @property
    def domain(self):
        return Domain(r_max=self.radius)

    @property
    def amplitude(self):
        return self.p_s / (4.0 * self.nu * self.ell)

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        out = np.zeros(3)
        if j or k:
            return out
        c = self.amplitude
        out[2] = {0: c * (self.radius**2 - r * r), 1: -2.0 * c * r, 2: -2.0 * c}.get(i, 0.0)
        return out

    def params(self):
        return {"p_s": self.p_s, "nu": self.nu, "ell": self.ell, "radius": self.radius}

    def formula(self):
        return "v_r = 0, v_theta = 0, v_z = p_s/(4 nu ell) (R^2 - r^2)"


@dataclass(frozen=True)
class Womersley(Field):
    """Oscillating-gradient pipe flow, real part of the Bessel solution.

    v_z = Re[ p_o/(iN) (1 - J0(k r)/J0(k R)) e^{iNt} ],  k = i^{3/2} sqrt(N/nu),
    so that d_t v_z - nu (d_rr + d_r/r) v_z = p_o cos(N t).
    """
    p_o: float = 1.0
    N: float = 4.0
    nu: float = 1.0
    radius: float = 1.0
    kind = "Womersley"
    euler = False
    citation = "oscillating pressure gradient p_o e^{iNt} in a pipe (Womersley profile)"

    def __post_init__(self):
        if self.nu <= 0 or self.radius <= 0 or self.N <= 0:
            raise ValueError("nu, radius and N must be positive")
        if self.womersley_number > 20:
            raise ValueError("Womersley number above 20 is outside the supported series range")

    @property
    def womersley_number(self):
        return self.radius * math.sqrt(self.N / self.nu)

    @property
    def domain(self):
        return Domain(r_max=self.radius)

    @property
    def time_scale(self):
        return min(1.0, 1.0 / self.N)

    def _k(self):
        return cmath.exp(0.75j * math.pi) * math.sqrt(self.N / self.nu)

    def partial(self, r, z, t, order=(0, 0, 0)):
        i, j, k = order
        out = np.zeros(3)
        if j:
            return out
        kk = self._k()
        J0R = j0_radial_derivative(kk, self.radius, 0)
        if i == 0:
            shape = j0_difference(kk, self.radius, abs(r)) / J0R
        else:
            shape = -j0_radial_derivative(kk, r, i) / J0R
        coeff = self.p_o / (1j * self.N) * (1j * self.N) ** k
        out[2] = (coeff * shape * cmath.exp(1j * self.N * t)).real
        return out

    def params(self):
        return {"p_o": self.p_o, "N": self.N, "nu": self.nu, "radius": self.radius,
                "womersley_number": self.womersley_number}

    def formula(self):
        return ("v_z = Re[p_o/(iN) (1 - J0(i^{3/2} alpha r/R)/J0(i^{3/2} alpha)) e^{iNt}], "
                "alpha = R sqrt(N/nu)")


class FunctionField(Field):
    """Field from user callables (r, z, t) -> component; derivatives by finite differences.

    Not an exact Euler flow unless declared so.
    """

    kind = "FunctionField"
    max_order = 3

    def __init__(self, v_r=None, v_theta=None, v_z=None, *, domain=None, steady=False,
                 euler=False, length_scale=1.0, time_scale=1.0, name="FunctionField"):
        zero = lambda r, z, t: 0.0
        self._fns = (v_r or zero, v_theta or zero, v_z or zero)
        self._domain = domain or Domain()
        self._steady = steady
        self.euler = euler
        self._scales = (length_scale, length_scale, time_scale)
        self.kind = name

    @property
    def steady(self):
        return self._steady

    @property
    def domain(self):
        return self._domain

    @property
    def length_scale(self):
        return self._scales[0]

    @property
    def time_scale(self):
        return self._scales[2]

    def _raw(self, r, z, t):
        sign = 1.0
        if r < 0:
            r, sign = -r, -1.0
        fr, ft, fz = self._fns
        return np.array([sign * fr(r, z, t), sign * ft(r, z, t), fz(r, z, t)], dtype=float)

    def partial(self, r, z, t, order=(0, 0, 0)):
        if sum(order) == 0:
            return self._raw(r, z, t)
        return fd_partial(self._raw, (r, z, t), order, self._scales)

    def formula(self):
        return "user-supplied components"
