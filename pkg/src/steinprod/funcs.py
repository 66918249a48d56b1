"""Smooth function handles with closed-form derivatives of every order.

Operator identities are verified against function families whose
derivatives are available analytically, so Monte Carlo noise stays the
only stochastic error source.  The workhorse family is p(x) exp(q(x))
with polynomial p, q, which is closed under differentiation.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def _poly_deriv(c: np.ndarray) -> np.ndarray:
    if len(c) <= 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, len(c))


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai != 0:
            out[i:i + len(b)] += ai * b
    return out


def _poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _poly_eval(c: np.ndarray, x):
    out = 0.0 * x if not np.isscalar(x) else 0.0
    for ck in reversed(c):
        out = out * x + ck
    return out


class PolyExp:
    """f(x) = p(x) exp(q(x)) with polynomial p, q (ascending coefficients)."""

    max_order = math.inf

    def __init__(self, p: Sequence[float], q: Sequence[float] = (0.0,)):
        self._p0 = np.asarray(p, dtype=float)
        self._q = np.asarray(q, dtype=float)
        self._qp = _poly_deriv(self._q)
        self._cache = [self._p0]

    def _prefactor(self, k: int) -> np.ndarray:
        while len(self._cache) <= k:
            last = self._cache[-1]
            self._cache.append(_poly_add(_poly_deriv(last), _poly_mul(last, self._qp)))
        return self._cache[k]

    def deriv(self, x, k: int = 0):
        return _poly_eval(self._prefactor(k), x) * np.exp(_poly_eval(self._q, x))

    def __call__(self, x):
        return self.deriv(x, 0)


class Sinusoid:
    """f(x) = amp * sin(omega x + phase); k-th derivative shifts the phase."""

    max_order = math.inf

    def __init__(self, omega: float = 1.0, phase: float = 0.0, amp: float = 1.0):
        self.omega = omega
        self.phase = phase
        self.amp = amp

    def deriv(self, x, k: int = 0):
        return self.amp * self.omega**k * np.sin(self.omega * x + self.phase + k * math.pi / 2)

    def __call__(self, x):
        return self.deriv(x, 0)


class BoundedRational:
    """f(x) = x / (s + x), bounded on x >= 0 with all derivatives bounded."""

    max_order = math.inf

    def __init__(self, shift: float = 1.0):
        self.shift = shift

    def deriv(self, x, k: int = 0):
        if k == 0:
            return x / (self.shift + x)
        # x/(s+x) = 1 - s/(s+x); d^k of (s+x)^{-1} is (-1)^k k! (s+x)^{-k-1}
        return -self.shift * (-1.0) ** k * math.factorial(k) * (self.shift + x) ** (-k - 1)

    def __call__(self, x):
        return self.deriv(x, 0)


class OpImage:
    """The image (O f) of a handle under a PolyDiffOp, itself a handle.

    Derivatives are taken by composing with D^k, so the result supplies
    exact derivatives as long as the base handle does.
    """

    def __init__(self, op, base):
        self._base = base
        self._ops = [op]
        self.max_order = math.inf

    def _op(self, k: int):
        from .opalg import PolyDiffOp

        while len(self._ops) <= k:
            self._ops.append(PolyDiffOp.derivative(1).compose(self._ops[-1]))
        return self._ops[k]

    def deriv(self, x, k: int = 0):
        return self._op(k).apply(self._base, x)

    def __call__(self, x):
        return self.deriv(x, 0)


class BesselPowerComb:
    """sum_i c_i x^{alpha_i} Phi_{nu_i}(rate * x^power) with Phi in {K, I}.

    Closed under differentiation through the recurrences
    K' = -(K_{nu-1}+K_{nu+1})/2 and I' = (I_{nu-1}+I_{nu+1})/2, so exact
    derivatives of Bessel-type densities and homogeneous solutions are
    available to any order.
    """

    max_order = math.inf

    def __init__(self, terms, rate: float, power: float = 1.0):
        # terms: iterable of (coeff, alpha, nu, kind) with kind "k" or "i"
        self.rate = rate
        self.power = power
        self._levels = [self._merge(terms)]

    @staticmethod
    def _merge(terms):
        out: dict[tuple, float] = {}
        for c, alpha, nu, kind in terms:
            key = (round(alpha, 12), round(nu, 12), kind)
            out[key] = out.get(key, 0.0) + c
        return [(c, a, n, k) for (a, n, k), c in out.items() if c != 0.0]

    def _differentiate(self, terms):
        new = []
        for c, alpha, nu, kind in terms:
            if alpha != 0.0:
                new.append((c * alpha, alpha - 1.0, nu, kind))
            scale = 0.5 * c * self.rate * self.power
            sign = -1.0 if kind == "k" else 1.0
            new.append((sign * scale, alpha + self.power - 1.0, nu - 1.0, kind))
            new.append((sign * scale, alpha + self.power - 1.0, nu + 1.0, kind))
        return self._merge(new)

    def _terms(self, k: int):
        while len(self._levels) <= k:
            self._levels.append(self._differentiate(self._levels[-1]))
        return self._levels[k]

    def deriv(self, x, k: int = 0):
        from .specfun import bessel_i, bessel_k

        xs = np.asarray(x, dtype=float)
        arg = self.rate * xs**self.power
        out = np.zeros_like(xs)
        for c, alpha, nu, kind in self._terms(k):
            fn = bessel_k if kind == "k" else bessel_i
            out = out + c * xs**alpha * fn(nu, arg)
        return out if np.ndim(x) else float(out)

    def __call__(self, x):
        return self.deriv(x, 0)


def constant(c: float = 1.0) -> PolyExp:
    return PolyExp([c])


def monomial(m: int) -> PolyExp:
    return PolyExp([0.0] * m + [1.0])


def gaussian_damped(i: int, tau: float = 1.0) -> PolyExp:
    """x^i exp(-x^2 / (2 tau^2)): rapidly decaying with all moments finite."""
    return PolyExp([0.0] * i + [1.0], [0.0, 0.0, -0.5 / tau**2])


def exponential_damped(i: int, tau: float = 1.0) -> PolyExp:
    """x^i exp(-x / tau): suitable for positive-support factors."""
    return PolyExp([0.0] * i + [1.0], [0.0, -1.0 / tau])


def exp_decay(rate: float = 1.0) -> PolyExp:
    return PolyExp([1.0], [0.0, -rate])


def gaussian_bump(tau: float = 1.0) -> PolyExp:
    return PolyExp([1.0], [0.0, 0.0, -0.5 / tau**2])
