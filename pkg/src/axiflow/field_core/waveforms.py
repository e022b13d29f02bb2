"""Scalar time waveforms g(t) and radial profiles f(r) with exact derivatives.

Plain callables are accepted everywhere a waveform or profile is expected;
they are wrapped and differentiated by the finite-difference engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.special import eval_hermite

from .derivatives import fd_derivative_1d


class Waveform:
    name = "waveform"

    def __call__(self, t: float) -> float:
        return self.derivative(t, 0)

    def derivative(self, t: float, n: int = 1) -> float:
        raise NotImplementedError

    def integral(self, t: float) -> float:
        """Integral from 0 to t."""
        val, _ = quad(lambda s: self.derivative(s, 0), 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val

    def params(self) -> dict:
        return {"kind": self.name}


@dataclass(frozen=True)
class Constant(Waveform):
    value: float = 1.0
    name = "const"

    def derivative(self, t, n=1):
        return self.value if n == 0 else 0.0

    def integral(self, t):
        return self.value * t

    def params(self):
        return {"kind": "const", "value": self.value}


@dataclass(frozen=True)
class Ramp(Waveform):
    start: float = 1.0
    slope: float = 1.0
    name = "ramp"

    def derivative(self, t, n=1):
        if n == 0:
            return self.start + self.slope * t
        return self.slope if n == 1 else 0.0

    def integral(self, t):
        return self.start * t + 0.5 * self.slope * t * t

    def params(self):
        return {"kind": "ramp", "start": self.start, "slope": self.slope}


@dataclass(frozen=True)
class Sinusoid(Waveform):
    """mean + amplitude * sin(N t)."""
    N: float = 1.0
    amplitude: float = 0.5
    mean: float = 1.0
    name = "sinusoid"

    def derivative(self, t, n=1):
        base = self.mean if n == 0 else 0.0
        # d^n/dt^n sin(Nt) = N^n sin(Nt + n pi/2)
        return base + self.amplitude * self.N**n * math.sin(self.N * t + n * math.pi / 2)

    def integral(self, t):
        if self.N == 0:
            return self.mean * t
        return self.mean * t + self.amplitude * (1.0 - math.cos(self.N * t)) / self.N

    def params(self):
        return {"kind": "sinusoid", "N": self.N, "amplitude": self.amplitude, "mean": self.mean}


@dataclass(frozen=True)
class SpikeTrain(Waveform):
    """base + sum_j height * exp(-((t - t_j)/w_j)^2).

    Widths default to width/(j+1), so later spikes are steeper and g', g''
    grow along the train while |g| stays of order one.
    """
    times: tuple
    height: float = 0.5
    width: float = 0.1
    widths: tuple | None = None
    base: float = 1.0
    name = "spike-train"

    def __post_init__(self):
        ts = list(self.times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("spike-train times must be strictly increasing")

    def _widths(self):
        if self.widths is not None:
            return list(self.widths)
        return [self.width / (j + 1) for j in range(len(self.times))]

    def derivative(self, t, n=1):
        out = self.base if n == 0 else 0.0
        for tj, w in zip(self.times, self._widths()):
            x = (t - tj) / w
            # d^n/dx^n exp(-x^2) = (-1)^n H_n(x) exp(-x^2)
            out += self.height * (-1) ** n * eval_hermite(n, x) * math.exp(-x * x) / w**n
        return out

    def integral(self, t):
        out = self.base * t
        for tj, w in zip(self.times, self._widths()):
            out += self.height * w * math.sqrt(math.pi) / 2 * (math.erf((t - tj) / w) - math.erf(-tj / w))
        return out

    def params(self):
        return {"kind": "spike-train", "times": list(self.times), "height": self.height,
                "width": self.width, "base": self.base}


@dataclass(frozen=True)
class CallableWaveform(Waveform):
    fn: Callable[[float], float]
    scale: float = 1.0
    name = "callable"

    def derivative(self, t, n=1):
        if n == 0:
            return float(self.fn(t))
        return fd_derivative_1d(self.fn, t, n, self.scale)


@dataclass(frozen=True)
class Affine(Waveform):
    """offset + scale * g(t): the inflow U_s + U_o g(t) with constant U_s, U_o."""
    g: Waveform
    offset: float = 0.0
    scale: float = 1.0
    name = "affine"

    def derivative(self, t, n=1):
        base = self.offset if n == 0 else 0.0
        return base + self.scale * self.g.derivative(t, n)

    def integral(self, t):
        return self.offset * t + self.scale * self.g.integral(t)

    def params(self):
        return {"kind": "affine", "offset": self.offset, "scale": self.scale, "g": self.g.params()}


def as_waveform(g) -> Waveform:
    if isinstance(g, Waveform):
        return g
    if isinstance(g, (int, float)):
        return Constant(float(g))
    if callable(g):
        return CallableWaveform(g)
    raise TypeError(f"cannot use {g!r} as a waveform")


def waveform_from_config(cfg) -> Waveform:
    if cfg is None:
        return Constant(1.0)
    if isinstance(cfg, (int, float)):
        return Constant(float(cfg))
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind == "const":
        return Constant(**cfg)
    if kind == "ramp":
        return Ramp(**cfg)
    if kind == "sinusoid":
        return Sinusoid(**cfg)
    if kind in ("spike-train", "spike_train"):
        cfg["times"] = tuple(cfg["times"])
        if "widths" in cfg:
            cfg["widths"] = tuple(cfg["widths"])
        return SpikeTrain(**cfg)
    raise ValueError(f"unknown waveform kind {kind!r}")


class Profile:
    name = "profile"

    def __call__(self, r):
        return self.derivative(r, 0)

    def derivative(self, r, n=1):
        raise NotImplementedError

    def params(self):
        return {"kind": self.name}


@dataclass(frozen=True)
class PolyProfile(Profile):
    """f(r) = sum_k coeffs[k] r^k."""
    coeffs: tuple = (1.0, 0.0, -0.5)
    name = "poly"

    def derivative(self, r, n=1):
        p = Polynomial(self.coeffs)
        return float(p.deriv(n)(r)) if n else float(p(r))

    def params(self):
        return {"kind": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class CallableProfile(Profile):
    fn: Callable[[float], float]
    scale: float = 1.0
    name = "callable"

    def derivative(self, r, n=1):
        if n == 0:
            return float(self.fn(r))
        return fd_derivative_1d(self.fn, r, n, self.scale)


def as_profile(f) -> Profile:
    if isinstance(f, Profile):
        return f
    if isinstance(f, (int, float)):
        return PolyProfile((float(f),))
    if isinstance(f, (list, tuple)):
        return PolyProfile(tuple(float(c) for c in f))
    if callable(f):
        return CallableProfile(f)
    raise TypeError(f"cannot use {f!r} as a radial profile")
