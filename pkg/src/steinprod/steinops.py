"""Stein operators for products of beta, gamma and mean-zero normal factors.

Each product specification maps to a characterising differential operator:
for mutually independent X (product of betas), Y (product of gammas with a
shared rate) and Z (product of centred normals),

    X   : B_a f - x B_{a+b} f
    Y   : B_r f - lam^n x f
    Z   : s^2 A_N f - x f
    XY  : B_a B_r f - lam^n x B_{a+b} f
    XZ  : s^2 B_a A_N B_a f - x B_{a+b} B_{a+b-1} f
    YZ  : s^2 B_r A_N B_r f - lam^{2n} x f
    XYZ : s^2 B_a B_r A_N B_r B_a f - lam^{2n} x B_{a+b} B_{a+b-1} f

where B_c is the commuting chain of T_c = x d/dx + c factors.  A product
of generalised gammas (power parameter q) has operator
B_r f - (q lam^q)^n x^q f, which for non-integer q is kept in factored
form rather than as a polynomial-coefficient operator.

Order reduction extracts the largest common chain of the two factored
sides and rewrites the operator to act on g = B_C f; the adjoint under
the Lebesgue weight yields the ODE annihilating the product density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Rational

from .opalg import FactoredOp, PolyDiffOp, adjoint_under_weight
from .funcs import OpImage


def _pos(name: str, value) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class ProductSpec:
    """Parameterisation of a product of independent beta/gamma/normal factors.

    ``sigma`` is the product of the normal scales; ``lam`` is the rate
    shared by all gamma factors.  ``q`` is the generalised-gamma power and
    may differ from 1 only for a pure gamma product.
    """

    beta_pairs: tuple[tuple[float, float], ...] = ()
    gamma_shapes: tuple[float, ...] = ()
    lam: float | None = None
    normal_count: int = 0
    sigma: float | None = None
    q: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta_pairs",
                           tuple((a, b) for a, b in self.beta_pairs))
        object.__setattr__(self, "gamma_shapes", tuple(self.gamma_shapes))
        if self.m + self.n + self.normal_count < 1:
            raise ValueError("at least one factor is required")
        for a, b in self.beta_pairs:
            _pos("beta shape a", a)
            _pos("beta shape b", b)
        for r in self.gamma_shapes:
            _pos("gamma shape", r)
        if self.n > 0:
            if self.lam is None:
                raise ValueError("gamma factors need a rate lam")
            _pos("lam", self.lam)
        elif self.lam is not None:
            raise ValueError("lam given without gamma factors")
        if self.normal_count < 0:
            raise ValueError("normal_count must be nonnegative")
        if self.normal_count > 0:
            if self.sigma is None:
                raise ValueError("normal factors need a scale sigma")
            _pos("sigma", self.sigma)
        elif self.sigma is not None:
            raise ValueError("sigma given without normal factors")
        _pos("q", self.q)
        if self.q != 1 and (self.m > 0 or self.normal_count > 0):
            raise ValueError("q != 1 is supported for pure gamma products only")

    # -- shorthand ---------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.beta_pairs)

    @property
    def n(self) -> int:
        return len(self.gamma_shapes)

    @property
    def N(self) -> int:
        return self.normal_count

    @property
    def symmetric(self) -> bool:
        return self.normal_count >= 1

    def row(self) -> str:
        if self.q != 1:
            return "PGG"
        label = ""
        if self.m:
            label += "X"
        if self.n:
            label += "Y"
        if self.N:
            label += "Z"
        return label

    def describe(self) -> str:
        bits = []
        if self.m:
            bits.append("beta" + str(list(self.beta_pairs)))
        if self.n:
            bits.append(f"gamma{list(self.gamma_shapes)}@{self.lam}")
        if self.N:
            bits.append(f"normal(N={self.N}, sigma={self.sigma})")
        if self.q != 1:
            bits.append(f"q={self.q}")
        return " * ".join(bits)


def _chain(values, coeff=1) -> FactoredOp:
    return FactoredOp.t_chain(list(values), coeff)


def _an_factored(n: int, coeff=1) -> FactoredOp:
    return FactoredOp(coeff, (("x", -1),) + tuple(("t", 0) for _ in range(n)))


@dataclass
class SteinOperatorBundle:
    """A Stein operator split as (differential side) - coeff * x^power * (side).

    ``operator`` is the combined polynomial-coefficient operator whenever
    the multiplier power is an integer (always true for q = 1).  The
    factored sides are retained so adjoints and order reduction can work
    structurally.
    """

    spec: ProductSpec
    diff_factored: FactoredOp
    mult_coeff: float
    mult_power: float
    mult_factored: FactoredOp
    expected_order: int
    reduced_order: int
    transform_chain: tuple = ()

    _diff_op: PolyDiffOp | None = field(default=None, repr=False)
    _mult_op: PolyDiffOp | None = field(default=None, repr=False)

    @property
    def diff_op(self) -> PolyDiffOp:
        if self._diff_op is None:
            self._diff_op = self.diff_factored.expand()
        return self._diff_op

    @property
    def mult_op(self) -> PolyDiffOp:
        if self._mult_op is None:
            self._mult_op = self.mult_factored.expand()
        return self._mult_op

    @property
    def operator(self) -> PolyDiffOp | None:
        power = self.mult_power
        if power != int(power):
            return None
        xmul = PolyDiffOp.x_power(int(power), -self.mult_coeff)
        return self.diff_op + xmul.compose(self.mult_op)

    @property
    def factored_form(self) -> tuple[FactoredOp, FactoredOp]:
        return self.diff_factored, self.mult_factored

    def apply(self, f, x):
        """Evaluate the operator on a smooth handle at scalar/array x."""
        diff = self.diff_op.apply(f, x)
        mult = self.mult_op.apply(f, x)
        return diff - self.mult_coeff * x**self.mult_power * mult

    def apply_terms(self, f, x):
        """The two sides separately (for magnitude scales in MC tests)."""
        return (self.diff_op.apply(f, x),
                self.mult_coeff * x**self.mult_power * self.mult_op.apply(f, x))

    def transformed_function(self, f):
        """g = B_C f for the common chain removed by order reduction."""
        if not self.transform_chain:
            return f
        from .opalg import compose_chain

        return OpImage(compose_chain(list(self.transform_chain)), f)


def build_stein(spec: ProductSpec) -> SteinOperatorBundle:
    """Construct the Stein operator bundle for a product specification."""
    a = [p[0] for p in spec.beta_pairs]
    b = [p[1] for p in spec.beta_pairs]
    ab = [ai + bi for ai, bi in spec.beta_pairs]
    r = list(spec.gamma_shapes)
    m, n, N = spec.m, spec.n, spec.N
    ident = FactoredOp(1, ())

    if spec.q != 1:
        coeff = (spec.q * spec.lam**spec.q) ** n
        return SteinOperatorBundle(
            spec=spec, diff_factored=_chain(r),
            mult_coeff=coeff, mult_power=spec.q, mult_factored=ident,
            expected_order=n, reduced_order=n)

    s2 = spec.sigma**2 if N else None
    if m and n and N:
        diff = _chain(a) * _chain(r) * _an_factored(N) * _chain(r) * _chain(a)
        diff = diff.scale(s2)
        mult = _chain(ab) * _chain([v - 1 for v in ab])
        coeff, order = spec.lam ** (2 * n), 2 * m + 2 * n + N
    elif m and N:
        diff = (_chain(a) * _an_factored(N) * _chain(a)).scale(s2)
        mult = _chain(ab) * _chain([v - 1 for v in ab])
        coeff, order = 1.0, 2 * m + N
    elif n and N:
        diff = (_chain(r) * _an_factored(N) * _chain(r)).scale(s2)
        mult = ident
        coeff, order = spec.lam ** (2 * n), 2 * n + N
    elif N:
        diff = _an_factored(N, s2)
        mult = ident
        coeff, order = 1.0, N
    elif m and n:
        diff = _chain(a) * _chain(r)
        mult = _chain(ab)
        coeff, order = spec.lam**n, m + n
    elif m:
        diff = _chain(a)
        mult = _chain(ab)
        coeff, order = 1.0, m
    else:
        diff = _chain(r)
        mult = ident
        coeff, order = spec.lam**n, n

    return SteinOperatorBundle(
        spec=spec, diff_factored=diff, mult_coeff=coeff, mult_power=1.0,
        mult_factored=mult, expected_order=order, reduced_order=order)


def _values_equal(u, v, tol: float = 1e-12) -> bool:
    if isinstance(u, Rational) and isinstance(v, Rational):
        return u == v
    return abs(float(u) - float(v)) <= tol


def _multiset_intersect(m1: list, m2: list) -> list:
    """Multiset intersection with exact/tolerant comparison."""
    pool = list(m1)
    common = []
    for v in m2:
        for i, u in enumerate(pool):
            if _values_equal(u, v):
                common.append(u)
                pool.pop(i)
                break
    return common


def reduction_sets(spec: ProductSpec) -> tuple[list, list]:
    """The parameter multisets whose intersection counts removable orders.

    The first list collects the differential-side chain parameters in the
    x^{-1} T_0^N representation; the second collects the multiplier-side
    chain parameters.
    """
    a = [p[0] for p in spec.beta_pairs]
    r = list(spec.gamma_shapes)
    side_s = a + [v - 1 for v in a] + r + [v - 1 for v in r] + [0] * spec.N
    ab = [ai + bi for ai, bi in spec.beta_pairs]
    side_r = ab + [v - 1 for v in ab]
    return side_s, side_r


def reduce_order(spec: ProductSpec) -> SteinOperatorBundle:
    """Lower-order Stein operator acting on g = B_C f.

    The full operator is  s^2 x^{-1} B(side_s) f - lam^{2n} x B(side_r) f
    (all chain factors commute); removing the common multiset C from both
    chains and substituting g = B_C f drops the order by |C|.  The reduced
    differential side may carry an x^{-1} constant term for some parameter
    coincidences; it still annihilates in expectation, pointwise equal to
    the full operator on the transformed function.
    """
    if spec.q != 1:
        raise ValueError("order reduction applies to q = 1 products")
    if spec.N == 0:
        if spec.m == 0:
            raise ValueError("order reduction needs beta factors")
        raise ValueError("order reduction targets products with a normal factor")
    full = build_stein(spec)
    side_s, side_r = reduction_sets(spec)
    common = _multiset_intersect(side_s, side_r)
    t = len(common)
    order = full.expected_order - t

    remaining_s = list(side_s)
    remaining_r = list(side_r)
    for v in common:
        for lst in (remaining_s, remaining_r):
            for i, u in enumerate(lst):
                if _values_equal(u, v):
                    lst.pop(i)
                    break

    s2 = spec.sigma**2
    diff = FactoredOp(s2, (("x", -1),) + tuple(("t", v) for v in remaining_s))
    mult = _chain(remaining_r)
    return SteinOperatorBundle(
        spec=spec, diff_factored=diff,
        mult_coeff=spec.lam ** (2 * spec.n) if spec.n else 1.0,
        mult_power=1.0, mult_factored=mult,
        expected_order=full.expected_order, reduced_order=order,
        transform_chain=tuple(common))


def adjoint_ode(spec: ProductSpec) -> PolyDiffOp:
    """Polynomial ODE annihilating the product density.

    Built by taking formal adjoints of the two factored sides of the Stein
    operator under the plain Lebesgue weight (the x factor of the
    multiplier side is absorbed into the weight), then normalising the
    leading sign.  For N >= 1 the result is

        T_0^N B_{-a} B_{-r} B_{1-r} B_{1-a} p
            - (-1)^N s^{-2} lam^{2n} x^2 B_{3-a-b} B_{2-a-b} p,

    and for N = 0 (positive support) B_{1-a} B_{1-r} p - (-1)^n lam^n x B_{2-a-b} p.
    """
    if spec.q != 1:
        raise ValueError("adjoint ODE applies to q = 1 products")
    a = [p[0] for p in spec.beta_pairs]
    ab = [p[0] + p[1] for p in spec.beta_pairs]
    r = list(spec.gamma_shapes)
    m, n, N = spec.m, spec.n, spec.N

    if N >= 1:
        side_s, side_r = reduction_sets(spec)
        s2 = spec.sigma**2
        piece1 = FactoredOp(s2, (("x", -1),) + tuple(("t", v) for v in side_s))
        piece2 = FactoredOp(-(spec.lam ** (2 * n)) if n else -1.0,
                            (("x", 1),) + tuple(("t", v) for v in side_r))
        adj = adjoint_under_weight(piece1, 0).expand() + adjoint_under_weight(piece2, 0).expand()
        # normalise: multiply by (-1)^N x / s^2 to clear x^{-1} and the sign
        sign = 1.0 if N % 2 == 0 else -1.0
        return PolyDiffOp.x_power(1, sign / s2).compose(adj)

    piece1 = _chain(a + r)
    piece2 = FactoredOp(-(spec.lam**n) if n else -1.0,
                        (("x", 1),) + tuple(("t", v) for v in ab))
    adj = adjoint_under_weight(piece1, 0).expand() + adjoint_under_weight(piece2, 0).expand()
    sign = 1.0 if (m + n) % 2 == 0 else -1.0
    return adj.scale(sign)
