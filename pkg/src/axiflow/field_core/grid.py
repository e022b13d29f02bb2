"""Gridded velocity data on a tensor (r, z, t) lattice with cubic splines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import NdBSpline, make_interp_spline

from ..errors import ConfigError
from .fixtures import Field
from .types import Domain

HEADER = ("r", "z", "t", "v_r", "v_theta", "v_z")


@dataclass(frozen=True, eq=False)
class GridData:
    r_nodes: np.ndarray
    z_nodes: np.ndarray
    t_nodes: np.ndarray
    values: np.ndarray          # shape (n_r, n_z, n_t, 3)
    interp_order: int = 3

    def __post_init__(self):
        for name in ("r_nodes", "z_nodes", "t_nodes"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1 or len(a) < 4:
                raise ConfigError(f"{name} needs at least 4 nodes", axis=name)
            if np.any(np.diff(a) <= 0):
                raise ConfigError(f"{name} must be strictly increasing", axis=name)
            object.__setattr__(self, name, a)
        vals = np.asarray(self.values, dtype=float)
        shape = (len(self.r_nodes), len(self.z_nodes), len(self.t_nodes), 3)
        if vals.shape != shape:
            raise ConfigError(f"values shape {vals.shape} != {shape}")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("grid values must be finite")
        if self.r_nodes[0] < 0:
            raise ConfigError("radial nodes must be non-negative")
        if self.r_nodes[0] == 0.0:
            axis = vals[0, :, :, :2]
            tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
            if np.max(np.abs(axis)) > tol:
                raise ConfigError("v_r and v_theta must vanish on the axis (r = 0 nodes)",
                                  max_axis_value=float(np.max(np.abs(axis))))
        object.__setattr__(self, "values", vals)
        if self.interp_order != 3:
            raise ConfigError("only cubic interpolation is supported")

    @classmethod
    def from_function(cls, fn, r_nodes, z_nodes, t_nodes):
        """Sample ``fn(r, z, t) -> (v_r, v_theta, v_z)`` on the lattice."""
        r_nodes, z_nodes, t_nodes = (np.asarray(a, dtype=float) for a in (r_nodes, z_nodes, t_nodes))
        vals = np.empty((len(r_nodes), len(z_nodes), len(t_nodes), 3))
        for a, r in enumerate(r_nodes):
            for b, z in enumerate(z_nodes):
                for c, t in enumerate(t_nodes):
                    vals[a, b, c] = fn(r, z, t)
        return cls(r_nodes, z_nodes, t_nodes, vals)


def _tensor_spline(nodes, values):
    coeffs = values
    knots = []
    for ax, x in enumerate(nodes):
        spl = make_interp_spline(x, coeffs, k=3, axis=ax)
        knots.append(spl.t)
        coeffs = np.moveaxis(spl.c, 0, ax)
    return NdBSpline(tuple(knots), coeffs, 3)


class Gridded(Field):
    """Cubic tensor-spline interpolation of a :class:`GridData` lattice.

    Derivatives come from the spline itself and are capped at order two.
    """

    kind = "Gridded"
    euler = True
    max_order = 2
    citation = "tabulated field, tensor cubic spline interpolation"

    def __init__(self, grid: GridData, steady=None):
        self.grid = grid
        self._spline = _tensor_spline((grid.r_nodes, grid.z_nodes, grid.t_nodes), grid.values)
        if steady is None:
            steady = bool(np.all(grid.values == grid.values[:, :, :1, :]))
        self._steady = steady

    @property
    def steady(self):
        return self._steady

    @property
    def domain(self):
        g = self.grid
        return Domain(r_min=g.r_nodes[0], r_max=g.r_nodes[-1], z_min=g.z_nodes[0],
                      z_max=g.z_nodes[-1], t_min=g.t_nodes[0], t_max=g.t_nodes[-1])

    @property
    def length_scale(self):
        return float(self.grid.r_nodes[-1])

    @property
    def time_scale(self):
        t = self.grid.t_nodes
        return float(t[-1] - t[0])

    def partial(self, r, z, t, order=(0, 0, 0)):
        if sum(order) > 2:
            from ..errors import ThirdOrderUnavailable
            raise ThirdOrderUnavailable("gridded fields provide derivatives up to order 2")
        sign = 1.0
        if r < 0:
            # odd parity for v_r, v_theta; even for v_z; each r-derivative flips it
            r = -r
            sign = -1.0
        out = self._spline(np.array([[r, z, t]]), nu=np.array(order))[0]
        if sign < 0:
            flip = np.array([-1.0, -1.0, 1.0]) * (-1.0) ** order[0]
            out = out * flip
        return np.asarray(out, dtype=float)

    def params(self):
        g = self.grid
        return {"n_r": len(g.r_nodes), "n_z": len(g.z_nodes), "n_t": len(g.t_nodes)}

    def formula(self):
        return "cubic tensor spline through tabulated (v_r, v_theta, v_z)"


def load_grid(path) -> GridData:
    """Read the columnar grid file (header ``r z t v_r v_theta v_z``)."""
    with open(path) as fh:
        header = fh.readline().split()
        if tuple(header) != HEADER:
            raise ConfigError(f"grid header must be {' '.join(HEADER)!r}, got {' '.join(header)!r}")
        try:
            data = np.loadtxt(fh, ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"malformed grid row: {exc}") from exc
    if data.shape[1] != 6:
        raise ConfigError("grid rows need 6 columns")
    r_nodes = np.unique(data[:, 0])
    z_nodes = np.unique(data[:, 1])
    t_nodes = np.unique(data[:, 2])
    n_r, n_z, n_t = len(r_nodes), len(z_nodes), len(t_nodes)
    if data.shape[0] != n_r * n_z * n_t:
        raise ConfigError("grid file is not a full tensor grid",
                          rows=int(data.shape[0]), expected=n_r * n_z * n_t)
    # row-major over (t, z, r): r varies fastest
    cube = data.reshape(n_t, n_z, n_r, 6)
    if not (np.all(cube[:, :, :, 0] == r_nodes[None, None, :])
            and np.all(cube[:, :, :, 1] == z_nodes[None, :, None])
            and np.all(cube[:, :, :, 2] == t_nodes[:, None, None])):
        raise ConfigError("grid rows must be ordered row-major over (t, z, r)")
    values = np.transpose(cube[:, :, :, 3:], (2, 1, 0, 3))
    return GridData(r_nodes, z_nodes, t_nodes, values)


def save_grid(grid: GridData, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(" ".join(HEADER) + "\n")
        for c, t in enumerate(grid.t_nodes):
            for b, z in enumerate(grid.z_nodes):
                for a, r in enumerate(grid.r_nodes):
                    v = grid.values[a, b, c]
                    fh.write(" ".join(repr(float(x)) for x in (r, z, t, *v)) + "\n")
