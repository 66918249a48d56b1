"""Exact algebra of linear differential operators with power coefficients.

An operator is a finite sum ``sum_{k,j} c_{k,j} x^j D^k`` acting on smooth
functions of one real variable.  The building blocks are the first-order
operators

    T_r : f |-> x f'(x) + r f(x)

their compositions (chains), and the order-N operator

    A_N : f |-> x^{-1} T_0^N f(x) = d/dx (T_0^{N-1} f(x)),

which expands into Stirling numbers of the second kind.  Coefficient
arithmetic stays exact (int / Fraction) whenever all inputs are exact;
float parameters degrade the coefficients to float.

Negative x-powers are permitted in stored terms (they arise from formal
adjoints taken under a weight); ``is_polynomial`` reports whether an
operator is free of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

Coeff = object  # int | Fraction | float
TermKey = tuple[int, int]  # (derivative order k, x-power j)


def _is_exact(value) -> bool:
    return isinstance(value, Rational)


def falling(a, i: int):
    """Falling factorial a (a-1) ... (a-i+1); exact if ``a`` is exact."""
    out = 1 if _is_exact(a) else 1.0
    for step in range(i):
        out = out * (a - step)
    return out


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind via the alternating binomial sum."""
    if k < 0 or n < 0:
        raise ValueError("stirling2 requires nonnegative arguments")
    if k > n:
        raise ValueError(f"stirling2 needs k <= n, got n={n}, k={k}")
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0:
        return 0
    total = 0
    for j in range(k + 1):
        term = math.comb(k, j) * j**n
        total += term if (k - j) % 2 == 0 else -term
    assert total % math.factorial(k) == 0
    return total // math.factorial(k)


class PolyDiffOp:
    """Immutable linear differential operator with power coefficients.

    ``terms`` maps ``(k, j)`` to the coefficient of ``x^j D^k``.  Zero
    coefficients are never stored.  Instances may carry the factored
    T-chain they were built from (``factored``), which formal adjoints
    operate on.
    """

    __slots__ = ("_terms", "factored")

    def __init__(self, terms: dict[TermKey, Coeff] | None = None,
                 factored: "FactoredOp | None" = None):
        clean: dict[TermKey, Coeff] = {}
        for (k, j), c in (terms or {}).items():
            if k < 0:
                raise ValueError("derivative order must be nonnegative")
            if c != 0:
                clean[(int(k), int(j))] = c
        self._terms = clean
        self.factored = factored

    # -- construction -----------------------------------------------------

    @staticmethod
    def zero() -> "PolyDiffOp":
        return PolyDiffOp({})

    @staticmethod
    def identity() -> "PolyDiffOp":
        return PolyDiffOp({(0, 0): 1})

    @staticmethod
    def x_power(j: int, coeff: Coeff = 1) -> "PolyDiffOp":
        """Multiplication operator f |-> coeff * x^j f."""
        return PolyDiffOp({(0, j): coeff})

    @staticmethod
    def derivative(k: int = 1) -> "PolyDiffOp":
        return PolyDiffOp({(k, 0): 1})

    # -- basic queries ------------------------------------------------------

    @property
    def terms(self) -> dict[TermKey, Coeff]:
        return dict(self._terms)

    @property
    def order(self) -> int:
        """Highest derivative index present (0 for the zero operator)."""
        return max((k for k, _ in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_polynomial(self) -> bool:
        return all(j >= 0 for _, j in self._terms)

    def coeff(self, k: int, j: int) -> Coeff:
        return self._terms.get((k, j), 0)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        terms = dict(self._terms)
        for key, c in other._terms.items():
            new = terms.get(key, 0) + c
            if new == 0:
                terms.pop(key, None)
            else:
                terms[key] = new
        return PolyDiffOp(terms)

    def __sub__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return self + other.scale(-1)

    def scale(self, c: Coeff) -> "PolyDiffOp":
        if c == 0:
            return PolyDiffOp.zero()
        return PolyDiffOp({key: c * v for key, v in self._terms.items()})

    def compose(self, inner: "PolyDiffOp") -> "PolyDiffOp":
        """Operator composition self o inner (``inner`` acts first).

        Uses Leibniz:  D^k (x^j g) = sum_i C(k,i) j^(i falling) x^{j-i} D^{k-i} g.
        """
        terms: dict[TermKey, Coeff] = {}
        for (k1, j1), c1 in self._terms.items():
            for (k2, j2), c2 in inner._terms.items():
                for i in range(k1 + 1):
                    f = falling(j2, i)
                    if f == 0:
                        continue
                    key = (k1 - i + k2, j1 + j2 - i)
                    add = c1 * c2 * math.comb(k1, i) * f
                    new = terms.get(key, 0) + add
                    if new == 0:
                        terms.pop(key, None)
                    else:
                        terms[key] = new
        return PolyDiffOp(terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def isclose(self, other: "PolyDiffOp", rtol: float = 1e-12) -> bool:
        """Termwise comparison with relative tolerance (for float parameters)."""
        keys = set(self._terms) | set(other._terms)
        for key in keys:
            a = float(self._terms.get(key, 0))
            b = float(other._terms.get(key, 0))
            if abs(a - b) > rtol * max(1.0, abs(a), abs(b)):
                return False
        return True

    # -- action -------------------------------------------------------------

    def apply(self, f, x):
        """Evaluate (self f)(x) for a handle ``f`` with ``f.deriv(x, k)``.

        ``x`` may be a scalar or a numpy array; the handle decides.
        """
        if self.max_derivative_demand() > getattr(f, "max_order", math.inf):
            raise ValueError("function handle cannot supply the required order")
        out = None
        for (k, j), c in sorted(self._terms.items()):
            piece = (float(c) if not isinstance(c, float) else c) * x**j * f.deriv(x, k)
            out = piece if out is None else out + piece
        if out is None:
            return 0.0 * x
        return out

    def max_derivative_demand(self) -> int:
        return self.order

    def apply_to_monomial(self, m: int) -> dict:
        """Exact action on x^m, returned as {power: coefficient}.

        x^j D^k x^m = m^(k falling) x^{m-k+j}.
        """
        out: dict = {}
        for (k, j), c in self._terms.items():
            f = falling(m, k)
            if f == 0:
                continue
            p = m - k + j
            new = out.get(p, 0) + c * f
            if new == 0:
                out.pop(p, None)
            else:
                out[p] = new
        return out

    # -- presentation ---------------------------------------------------------

    def __repr__(self):
        return f"PolyDiffOp({self.pretty()})"

    def pretty(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (k, j) in sorted(self._terms, key=lambda kj: (-kj[0], -kj[1])):
            c = self._terms[(k, j)]
            if isinstance(c, Fraction):
                cs = str(c)
            elif isinstance(c, float):
                cs = f"{c:.12g}"
            else:
                cs = str(c)
            factors = []
            if j == 1:
                factors.append("x")
            elif j != 0:
                factors.append(f"x^{j}")
            if k == 1:
                factors.append("D")
            elif k > 1:
                factors.append(f"D^{k}")
            body = " ".join(factors)
            parts.append(f"{cs} {body}".strip() if body else cs)
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> str:
        items = [{"k": k, "j": j, "coeff": float(c)}
                 for (k, j), c in sorted(self._terms.items())]
        return json.dumps({"terms": items, "order": self.order})

    @staticmethod
    def from_json(text: str) -> "PolyDiffOp":
        data = json.loads(text)
        return PolyDiffOp({(t["k"], t["j"]): t["coeff"] for t in data["terms"]})


# -- factored T-chain form ------------------------------------------------

# A factor is ("t", r) for T_r = x D + r, or ("x", j) for multiplication by
# x^j (j may be negative).  Factors are stored outermost first.
Factor = tuple[str, object]


@dataclass(frozen=True)
class FactoredOp:
    """Operator kept as a scalar multiple of a chain of T_r and x^j factors."""

    coeff: Coeff
    factors: tuple[Factor, ...]

    @staticmethod
    def t_chain(rs: Sequence, coeff: Coeff = 1) -> "FactoredOp":
        """Chain T_{r_n} ... T_{r_1} for rs = (r_1, ..., r_n)."""
        return FactoredOp(coeff, tuple(("t", r) for r in reversed(list(rs))))

    def __mul__(self, other: "FactoredOp") -> "FactoredOp":
        """Composition self o other (other acts first)."""
        return FactoredOp(self.coeff * other.coeff, self.factors + other.factors)

    def scale(self, c: Coeff) -> "FactoredOp":
        return FactoredOp(self.coeff * c, self.factors)

    def expand(self) -> PolyDiffOp:
        op = PolyDiffOp.identity()
        for kind, val in reversed(self.factors):
            if kind == "t":
                op = make_t(val).compose(op)
            elif kind == "x":
                op = PolyDiffOp.x_power(val).compose(op)
            else:
                raise ValueError(f"unknown factor kind {kind!r}")
        op = op.scale(self.coeff)
        return PolyDiffOp(op.terms, factored=self)

    def t_parameters(self) -> list:
        return [val for kind, val in self.factors if kind == "t"]


def make_t(r) -> PolyDiffOp:
    """The operator T_r f = x f' + r f."""
    terms = {(1, 1): 1}
    if r != 0:
        terms[(0, 0)] = r
    return PolyDiffOp(terms, factored=FactoredOp(1, (("t", r),)))


def compose_chain(rs: Sequence) -> PolyDiffOp:
    """Chain T_{r_n} ... T_{r_1} built by explicit composition."""
    rs = list(rs)
    if not rs:
        raise ValueError("empty chain")
    op = make_t(rs[0])
    for r in rs[1:]:
        op = make_t(r).compose(op)
    return PolyDiffOp(op.terms, factored=FactoredOp.t_chain(rs))


def make_an(n: int) -> PolyDiffOp:
    """The operator A_N = x^{-1} T_0^N = sum_k S(N,k) x^{k-1} D^k."""
    if n < 1:
        raise ValueError("A_N requires N >= 1")
    terms = {(k, k - 1): stirling2(n, k) for k in range(1, n + 1)}
    fac = FactoredOp(1, (("x", -1),) + tuple(("t", 0) for _ in range(n)))
    return PolyDiffOp(terms, factored=fac)


def disentangle_b(rs: Sequence) -> PolyDiffOp:
    """Closed-form expansion of the chain T_{r_n} ... T_{r_1}.

    The coefficient of x^k D^k is the k-th finite difference at 0 of the
    eigenvalue polynomial s |-> prod_i (s + r_i), divided by k!; this is the
    unique expansion because the chain acts on x^s by that polynomial and
    x^k D^k acts by the falling factorial s^(k falling).
    """
    rs = list(rs)
    if not rs:
        raise ValueError("empty chain")
    exact = all(_is_exact(r) for r in rs)
    m = len(rs)
    terms: dict[TermKey, Coeff] = {}
    for k in range(m + 1):
        acc = 0
        for j in range(k + 1):
            prod = 1 if exact else 1.0
            for r in rs:
                prod = prod * (j + r)
            term = math.comb(k, j) * prod
            acc = acc + (term if (k - j) % 2 == 0 else -term)
        if exact:
            c = Fraction(acc, math.factorial(k))
            if c.denominator == 1:
                c = c.numerator
        else:
            c = acc / math.factorial(k)
        if c != 0:
            terms[(k, k)] = c
    return PolyDiffOp(terms, factored=FactoredOp.t_chain(rs))


def shift_past_an(rs: Sequence, n: int) -> tuple[PolyDiffOp, PolyDiffOp]:
    """Return the pair (A_N o B_rs, B_{rs+1} o A_N); the two are equal."""
    rs = list(rs)
    if not rs:
        raise ValueError("empty chain")
    left = make_an(n).compose(compose_chain(rs))
    right = compose_chain([r + 1 for r in rs]).compose(make_an(n))
    return left, right


def adjoint_under_weight(op: PolyDiffOp | FactoredOp, gamma) -> FactoredOp:
    """Formal adjoint with respect to the weight x^gamma.

    With int x^g phi (T_r psi) dx = -int x^g (T_{g+1-r} phi) psi dx + boundary,
    the adjoint of a chain reverses the factor order, maps each T_r to
    -T_{gamma'+1-r} at the weight current at that factor, and lets every
    x^j factor shift the weight for the factors inside it.
    """
    if isinstance(op, PolyDiffOp):
        if op.factored is None:
            raise ValueError("factored form required")
        op = op.factored
    out: list[Factor] = []
    sign = 1
    g = gamma
    prepend: list[Factor] = []  # x-powers stay outermost in the adjoint
    for kind, val in op.factors:  # outermost first
        if kind == "x":
            prepend.append(("x", val))
            g = g + val
        elif kind == "t":
            sign = -sign
            out.insert(0, ("t", g + 1 - val))
        else:
            raise ValueError(f"unknown factor kind {kind!r}")
    return FactoredOp(op.coeff * sign, tuple(prepend) + tuple(out))


def adjoint_expanded(op: PolyDiffOp, gamma) -> PolyDiffOp:
    """General expanded adjoint sum (-1)^k x^{-gamma} D^k (x^{gamma+j} . ).

    Cross-check oracle for ``adjoint_under_weight``; works on any expanded
    operator, not just factored chains.
    """
    terms: dict[TermKey, Coeff] = {}
    for (k, j), c in op.terms.items():
        for i in range(k + 1):
            f = falling(gamma + j, i)
            if f == 0:
                continue
            key = (k - i, j - i)
            add = c * math.comb(k, i) * f * (-1) ** k
            new = terms.get(key, 0) + add
            if new == 0:
                terms.pop(key, None)
            else:
                terms[key] = new
    return PolyDiffOp(terms)
