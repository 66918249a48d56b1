"""Quadrature helpers: Gauss-Legendre panels, adaptivity, tanh-sinh.

These are deliberately small: panel Gauss-Legendre with interval halving
covers the smooth integrands, and tanh-sinh handles integrable endpoint
singularities (power or logarithmic) that the product densities exhibit
at the origin.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def gl_panel(f: Callable, a: float, b: float, n: int = 16) -> float:
    x, w = gauss_legendre(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(w * f(mid + half * x)))


def adaptive(f: Callable, a: float, b: float, tol: float = 1e-10,
             rtol: float = 1e-12, max_depth: int = 24) -> float:
    """Adaptive Gauss-Legendre by interval halving.

    Stops when the halving correction is below max(tol, rtol * |panel|);
    the relative term keeps large-magnitude integrands from recursing
    into roundoff noise.
    """

    def recurse(lo, hi, whole, depth):
        mid = 0.5 * (lo + hi)
        left = gl_panel(f, lo, mid)
        right = gl_panel(f, mid, hi)
        if depth <= 0:
            return left + right
        if abs(left + right - whole) <= max(tol, rtol * abs(whole)):
            return left + right
        return (recurse(lo, mid, left, depth - 1)
                + recurse(mid, hi, right, depth - 1))

    return recurse(a, b, gl_panel(f, a, b), max_depth)


def tanh_sinh(f: Callable, a: float, b: float, tol: float = 1e-12,
              max_level: int = 10) -> float:
    """Tanh-sinh rule on (a, b); tolerates integrable endpoint singularities."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)

    def nodes(h: float, ks: np.ndarray):
        t = h * ks
        u = 0.5 * math.pi * np.sinh(t)
        x = np.tanh(u)
        w = 0.5 * math.pi * np.cosh(t) / np.cosh(u) ** 2
        return x, w

    def eval_points(x: np.ndarray, w: np.ndarray) -> float:
        pts = mid + half * x
        inside = (pts > a) & (pts < b)
        if not np.any(inside):
            return 0.0
        vals = f(pts[inside])
        return float(np.sum(np.asarray(vals) * w[inside]))

    h = 1.0
    kmax = 4
    ks = np.arange(-kmax, kmax + 1)
    x, w = nodes(h, ks)
    total = eval_points(x, w)
    result = half * h * total
    for level in range(1, max_level + 1):
        h *= 0.5
        kmax = int(6.0 / h)
        new_ks = np.arange(-kmax, kmax + 1)
        odd = new_ks[new_ks % 2 != 0]  # nodes not already evaluated
        x, w = nodes(h, odd)
        total += eval_points(x, w)
        new_result = half * h * total
        if level >= 3 and abs(new_result - result) <= max(tol, tol * abs(new_result)):
            return new_result
        result = new_result
    return result
