from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class CylVec(NamedTuple):
    """Cylindrical vector (v_r, v_theta, v_z)."""
    v_r: float
    v_theta: float
    v_z: float

    @classmethod
    def of(cls, a) -> "CylVec":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def norm(self) -> float:
        return math.sqrt(self.v_r**2 + self.v_theta**2 + self.v_z**2)

    def to_cartesian(self, theta: float) -> np.ndarray:
        return cyl_to_cart(np.asarray(self), theta)


def cyl_to_cart(vec, theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([vec[0] * c - vec[1] * s, vec[0] * s + vec[1] * c, vec[2]])


def cart_to_cyl(vec, theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([vec[0] * c + vec[1] * s, -vec[0] * s + vec[1] * c, vec[2]])


# attribute name -> (order in r, order in z, order in t)
JET_KEYS = {
    "value": (0, 0, 0),
    "d_r": (1, 0, 0), "d_z": (0, 1, 0), "d_t": (0, 0, 1),
    "d_rr": (2, 0, 0), "d_rz": (1, 1, 0), "d_zz": (0, 2, 0),
    "d_rt": (1, 0, 1), "d_zt": (0, 1, 1), "d_tt": (0, 0, 2),
}
THIRD_KEYS = {
    "d_rrr": (3, 0, 0), "d_rrz": (2, 1, 0), "d_rzz": (1, 2, 0), "d_zzz": (0, 3, 0),
}


@dataclass(frozen=True)
class FieldJet:
    value: CylVec
    d_r: CylVec
    d_z: CylVec
    d_t: CylVec
    d_rr: CylVec
    d_rz: CylVec
    d_zz: CylVec
    d_rt: CylVec
    d_zt: CylVec
    d_tt: CylVec
    d_rrr: Optional[CylVec] = None
    d_rrz: Optional[CylVec] = None
    d_rzz: Optional[CylVec] = None
    d_zzz: Optional[CylVec] = None

    @property
    def has_third(self) -> bool:
        return self.d_rrr is not None

    def get(self, order) -> np.ndarray:
        """Partial by derivative multi-index (r, z, t)."""
        for name, key in {**JET_KEYS, **THIRD_KEYS}.items():
            if key == tuple(order):
                v = getattr(self, name)
                if v is None:
                    break
                return np.asarray(v)
        raise KeyError(order)


@dataclass(frozen=True)
class Domain:
    r_max: Optional[float] = None
    z_min: float = -math.inf
    z_max: float = math.inf
    t_min: float = -math.inf
    t_max: float = math.inf
    r_min: float = 0.0

    def contains(self, r, z, t) -> bool:
        if r < self.r_min or (self.r_max is not None and r > self.r_max):
            return False
        return self.z_min <= z <= self.z_max and self.t_min <= t <= self.t_max

    def margin(self, r, z, t) -> float:
        """Signed distance-like margin, >= 0 inside (used as an ODE event)."""
        m = min(z - self.z_min, self.z_max - z, t - self.t_min, self.t_max - t)
        if self.r_max is not None:
            m = min(m, self.r_max - r)
        return m
