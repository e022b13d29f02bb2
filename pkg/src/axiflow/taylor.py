"""Truncated multivariate Taylor polynomials, used to differentiate inverse maps."""
from __future__ import annotations

import math
from itertools import product

import numpy as np


class Trunc:
    """Polynomial in three variables truncated at total degree ``deg``."""

    def __init__(self, coef=None, deg=3):
        self.deg = deg
        self.c = np.zeros((deg + 1,) * 3) if coef is None else coef

    @classmethod
    def var(cls, i, deg=3):
        p = cls(deg=deg)
        idx = [0, 0, 0]
        idx[i] = 1
        p.c[tuple(idx)] = 1.0
        return p

    @classmethod
    def const(cls, v, deg=3):
        p = cls(deg=deg)
        p.c[0, 0, 0] = v
        return p

    def _terms(self):
        return [(idx, v) for idx, v in np.ndenumerate(self.c) if v != 0.0 and sum(idx) <= self.deg]

    def __add__(self, o):
        return Trunc(self.c + o.c, self.deg)

    def __sub__(self, o):
        return Trunc(self.c - o.c, self.deg)

    def scale(self, k):
        return Trunc(self.c * k, self.deg)

    def __mul__(self, o):
        out = np.zeros_like(self.c)
        for (i, a) in self._terms():
            for (j, b) in o._terms():
                k = (i[0] + j[0], i[1] + j[1], i[2] + j[2])
                if sum(k) <= self.deg:
                    out[k] += a * b
        return Trunc(out, self.deg)

    def pow(self, n):
        p = Trunc.const(1.0, self.deg)
        for _ in range(n):
            p = p * self
        return p

    def derivative(self, idx):
        """Partial derivative at the origin for multi-index ``idx``."""
        return float(self.c[tuple(idx)] * math.prod(math.factorial(i) for i in idx))


def inverse_partials(F: dict, deg=3) -> dict:
    """Partials of S(r, z, t) defined by F(S(r, z, t), z, t) = r.

    ``F`` maps multi-indices (a_order, z_order, t_order) to partials of F at the
    base point; missing entries are zero.  Returns partials of S keyed by
    (r_order, z_order, t_order) for every multi-index of total order 1..deg.
    """
    Fa = F[(1, 0, 0)]
    dr, dz, dt = (Trunc.var(i, deg) for i in range(3))
    dz_pows = [dz.pow(q) for q in range(deg + 1)]
    dt_pows = [dt.pow(m) for m in range(deg + 1)]
    sigma = dr.scale(1.0 / Fa)
    for _ in range(deg + 1):
        sig_pows = [sigma.pow(p) for p in range(deg + 1)]
        N = Trunc(deg=deg)
        for (p, q, m), v in F.items():
            if (p, q, m) in ((0, 0, 0), (1, 0, 0)) or v == 0.0 or p + q + m > deg:
                continue
            coef = v / (math.factorial(p) * math.factorial(q) * math.factorial(m))
            N = N + (sig_pows[p] * dz_pows[q] * dt_pows[m]).scale(coef)
        sigma = (dr - N).scale(1.0 / Fa)
    return {idx: sigma.derivative(idx) for idx in product(range(deg + 1), repeat=3)
            if 1 <= sum(idx) <= deg}
