"""Finite-difference derivative engine.

Tensor products of second-order central stencils, extrapolated once
(Richardson, h and h/2).  The step for a derivative of total order m is
``scale * eps**(1/(m+4))``, the round-off/truncation balance for a
fourth-order-accurate extrapolated estimate.
"""
from __future__ import annotations

import itertools

import numpy as np

EPS = np.finfo(float).eps

# derivative order -> (offsets, weights) for a unit step
_CENTRAL = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def fd_step(order: int, scale: float = 1.0) -> float:
    return max(scale * EPS ** (1.0 / (order + 4)), 1e-7 * scale)


def _tensor_diff(func, x, orders, steps):
    stencils = [_CENTRAL[o] for o in orders]
    acc = None
    for combo in itertools.product(*[range(len(s[0])) for s in stencils]):
        w = 1.0
        pt = list(x)
        for var, idx in enumerate(combo):
            off, wts = stencils[var]
            w *= wts[idx]
            pt[var] = x[var] + off[idx] * steps[var]
        val = np.asarray(func(*pt), dtype=float) * w
        acc = val if acc is None else acc + val
    denom = 1.0
    for o, h in zip(orders, steps):
        denom *= h**o
    return acc / denom


def fd_partial(func, x, orders, scales=None, richardson=True):
    """Mixed partial of ``func(*x)`` with derivative ``orders`` per variable."""
    x = [float(v) for v in x]
    if scales is None:
        scales = [1.0] * len(x)
    m = sum(orders)
    if m == 0:
        return np.asarray(func(*x), dtype=float)
    steps = [fd_step(m, s) for s in scales]
    coarse = _tensor_diff(func, x, orders, steps)
    if not richardson:
        return coarse
    fine = _tensor_diff(func, x, orders, [h / 2 for h in steps])
    return (4.0 * fine - coarse) / 3.0


def fd_derivative_1d(fn, x, n, scale=1.0):
    return float(fd_partial(lambda v: fn(v), [x], [n], [scale]))


def fornberg_weights(x0, nodes, m):
    """Weights for the m-th derivative at x0 from arbitrary ``nodes``.

    Fornberg (1988) recursion; returns an array of len(nodes).
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def stencil_indices(i, n, width=5):
    """Indices of a ``width``-point stencil around i, shifted inside [0, n)."""
    width = min(width, n)
    lo = i - width // 2
    lo = max(0, min(lo, n - width))
    return np.arange(lo, lo + width)


def differentiate_nodes(values, nodes, m, axis=0, width=5):
    """m-th derivative of tabulated ``values`` along ``axis`` on nonuniform nodes."""
    values = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    out = np.empty_like(values)
    if n == 1:
        out[...] = 0.0
        return np.moveaxis(out, 0, axis)
    w = max(width, m + 1)
    for i in range(n):
        idx = stencil_indices(i, n, w)
        wts = fornberg_weights(nodes[i], nodes[idx], m)
        out[i] = np.tensordot(wts, values[idx], axes=(0, 0))
    return np.moveaxis(out, 0, axis)
