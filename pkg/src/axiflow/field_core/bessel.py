"""Power series for J0 of a complex argument and its radial derivatives.

J0(k r) = sum_j a_j (k r)^(2j),  a_j = (-1/4)^j / (j!)^2.
Summation stops when the term ratio drops below 1e-14 relative to the sum.
Supported range: |k| r <= 20 (Womersley number up to 20).
"""
from __future__ import annotations

import math

RTOL = 1e-14
MAX_TERMS = 400


def _falling(n, m):
    out = 1
    for i in range(m):
        out *= n - i
    return out


def j0_radial_derivative(k: complex, r: float, m: int = 0) -> complex:
    """d^m/dr^m J0(k r)."""
    total = 0j
    a = 1 + 0j           # a_j k^(2j)
    q = -(k * k) / 4.0
    for j in range(MAX_TERMS):
        p = 2 * j
        if p >= m:
            if r == 0.0:
                term = a * math.factorial(m) if p == m else 0j
            else:
                term = a * _falling(p, m) * r ** (p - m)
            total += term
            if j > m and abs(term) <= RTOL * abs(total):
                break
            if r == 0.0 and p >= m:
                break
        a *= q / ((j + 1) ** 2)
    return total


def j0_difference(k: complex, R: float, r: float) -> complex:
    """J0(k R) - J0(k r) without cancellation of the leading term."""
    total = 0j
    a = 1 + 0j
    q = -(k * k) / 4.0
    for j in range(1, MAX_TERMS):
        a *= q / (j * j)
        term = a * (R ** (2 * j) - r ** (2 * j))
        total += term
        if abs(term) <= RTOL * abs(total) and j > 2:
            break
    return total
