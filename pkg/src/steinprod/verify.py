"""Cross-verification harness: Monte Carlo Stein identities, adjoint-ODE
residual scans, Mellin equalities and sampler/density agreement.

Every check emits a machine-readable report.  Monte Carlo tests pass when
the estimate sits within max(absolute floor, three standard errors) of
zero; deterministic tests compare against their stated tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import dist, funcs
from .steinops import ProductSpec, SteinOperatorBundle, adjoint_ode, build_stein, reduce_order

REPORT_VERSION = 1


@dataclass
class VerificationReport:
    """Outcome of one verification run."""

    test_id: str
    estimate: float
    standard_error: float
    tolerance: float
    samples: int
    seed: int
    passed: bool
    details: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["version"] = REPORT_VERSION
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class TestFunctionFamily:
    """Smooth test functions with derivatives of every order.

    kinds: "gaussian_damped" (x^i exp(-x^2/(2 tau^2))), "exponential_damped"
    (x^i exp(-x/tau)), "monomial" (x^i).  All members satisfy the moment
    conditions of the identities they are used against by construction.
    """

    kind: str
    indices: tuple[int, ...]
    tau: float = 1.0

    def members(self) -> list:
        if self.kind == "gaussian_damped":
            return [funcs.gaussian_damped(i, self.tau) for i in self.indices]
        if self.kind == "exponential_damped":
            return [funcs.exponential_damped(i, self.tau) for i in self.indices]
        if self.kind == "monomial":
            return [funcs.monomial(i) for i in self.indices]
        raise ValueError(f"unknown family kind {self.kind!r}")

    def label(self, i: int) -> str:
        return f"{self.kind}[{i}]"


def default_family(spec: ProductSpec) -> TestFunctionFamily:
    """Five-member damped family scaled to the spec's standard deviation."""
    try:
        tau = math.sqrt(max(dist.moment(spec, 2), 1e-6))
    except ValueError:
        tau = 1.0
    return TestFunctionFamily(kind="gaussian_damped", indices=(0, 1, 2, 3, 4), tau=tau)


# ---------------------------------------------------------------------------
# Monte Carlo Stein identities
# ---------------------------------------------------------------------------

def mc_stein_identity(spec: ProductSpec, family: TestFunctionFamily,
                      samples: int, seed: int, workers: int = 1,
                      bundle: SteinOperatorBundle | None = None,
                      transform: bool = False) -> VerificationReport:
    """Estimate E[A f(W)] for every family member; report the worst one."""
    bundle = bundle or build_stein(spec)
    members = family.members()
    if bundle.reduced_order > max(getattr(f, "max_order", 0) for f in members):
        raise ValueError("operator order exceeds family smoothness")
    w = dist.sample(spec, samples, seed, workers=workers)
    worst = None
    lines = []
    for i, f in zip(family.indices, members):
        g = bundle.transformed_function(f) if transform else f
        term_diff, term_mult = bundle.apply_terms(g, w)
        vals = term_diff - term_mult
        est = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
        scale = float(np.mean(np.abs(term_diff)) + np.mean(np.abs(term_mult)))
        floor = 1e-3 * scale
        ratio = abs(est) / max(floor, 3.0 * se, 1e-300)
        lines.append(f"{family.label(i)}: est={est:.3e} se={se:.3e} scale={scale:.3e}")
        if worst is None or ratio > worst[0]:
            worst = (ratio, est, se, floor)
    _, est, se, floor = worst
    return VerificationReport(
        test_id=f"mc-stein[{spec.describe()}|{family.kind}]",
        estimate=est, standard_error=se, tolerance=floor,
        samples=samples, seed=seed,
        passed=abs(est) <= max(floor, 3.0 * se),
        details="; ".join(lines))


def reduced_full_mc_compare(spec: ProductSpec, f, samples: int,
                            seed: int) -> VerificationReport:
    """Full operator on f versus reduced operator on g = B_C f, same draws.

    The two are pointwise equal up to floating error, so the comparison
    passes far inside three standard errors; the pointwise gap is also
    reported in the details.
    """
    full = build_stein(spec)
    red = reduce_order(spec)
    w = dist.sample(spec, samples, seed)
    a_full = full.apply(f, w)
    g = red.transformed_function(f)
    a_red = red.apply(g, w)
    diff = a_full - a_red
    est = float(np.mean(diff))
    se_full = float(np.std(a_full, ddof=1) / math.sqrt(len(w)))
    scale = float(np.mean(np.abs(a_full)) + 1e-300)
    point_gap = float(np.max(np.abs(diff)) / max(np.max(np.abs(a_full)), 1e-300))
    return VerificationReport(
        test_id=f"reduced-vs-full[{spec.describe()}]",
        estimate=est, standard_error=se_full, tolerance=1e-3 * scale,
        samples=samples, seed=seed,
        passed=abs(est) <= max(1e-3 * scale, 3.0 * se_full) and point_gap < 1e-8,
        details=f"orders {full.expected_order}->{red.reduced_order}; "
                f"pointwise gap {point_gap:.2e}")


# ---------------------------------------------------------------------------
# adjoint ODE residuals
# ---------------------------------------------------------------------------

def _fornberg(z: float, xs: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at z on nodes xs."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = xs[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - z
        for j in range(i):
            c3 = xs[i] - xs[j]
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


def _theta_poly(shifts) -> np.ndarray:
    """Ascending coefficients of prod_i (theta + shift_i)."""
    coeffs = np.array([1.0])
    for s in shifts:
        coeffs = np.convolve(coeffs, np.array([s, 1.0]))
    return coeffs


def _log_derivatives(values_fn, x: float, imax: int, h: float,
                     points: int = 13) -> np.ndarray:
    """d^i/dt^i of p(e^t) at t = ln x for i = 0..imax, Richardson-refined."""
    t0 = math.log(x)
    half = points // 2
    offsets = np.arange(-half, half + 1)

    def table(step: float) -> np.ndarray:
        ts = t0 + step * offsets
        vals = values_fn(np.exp(ts))
        return np.array([
            _fornberg(t0, ts, i) @ vals for i in range(imax + 1)])

    coarse = table(h)
    fine = table(0.5 * h)
    out = np.empty(imax + 1)
    for i in range(imax + 1):
        order = points - i - (points - i) % 2
        w = 2.0**order
        out[i] = (w * fine[i] - coarse[i]) / (w - 1.0)
    return out


def adjoint_residual_scan(spec: ProductSpec, grid, tolerance: float | None = None,
                          handle=None, fd_step: float = 0.08) -> VerificationReport:
    """max |A* p| / max |p| over the grid for the density-annihilating ODE.

    With an analytic handle (Gaussian, Bessel-type densities) the operator
    is applied exactly; otherwise derivatives are taken by finite
    differences in log coordinates, where the operator is a polynomial in
    theta = x d/dx and stencils never cross the origin.
    """
    grid = np.asarray(grid, dtype=float)
    excluded = int(np.sum(np.abs(grid) < 1e-12))
    grid = grid[np.abs(grid) >= 1e-12]  # the origin is singular for most densities
    ode = adjoint_ode(spec)
    ev = dist.density(spec)
    pvals = ev.batch(grid)
    pmax = float(np.max(np.abs(pvals)))
    if handle is not None:
        residuals = np.array([ode.apply(handle, float(x)) for x in grid])
        tol = tolerance if tolerance is not None else 1e-8
        method = "analytic"
    else:
        a = [p[0] for p in spec.beta_pairs]
        ab = [p[0] + p[1] for p in spec.beta_pairs]
        r = list(spec.gamma_shapes)
        if spec.N >= 1:
            poly1 = _theta_poly([0.0] * spec.N + [-v for v in a] + [-v for v in r]
                                + [1.0 - v for v in r] + [1.0 - v for v in a])
            poly2 = _theta_poly([3.0 - v for v in ab] + [2.0 - v for v in ab])
            lam2n = spec.lam ** (2 * spec.n) if spec.n else 1.0
            c2 = -((-1.0) ** spec.N) * lam2n / spec.sigma**2
            xpow = 2
        else:
            poly1 = _theta_poly([1.0 - v for v in a] + [1.0 - v for v in r])
            poly2 = _theta_poly([2.0 - v for v in ab])
            c2 = -((-1.0) ** spec.n) * (spec.lam**spec.n if spec.n else 1.0)
            xpow = 1
        imax = max(len(poly1), len(poly2)) - 1
        residuals = np.empty_like(grid)
        for idx, x in enumerate(grid):
            th = _log_derivatives(lambda xs: ev.batch(xs), float(x), imax, fd_step)
            residuals[idx] = (float(np.dot(poly1, th[: len(poly1)]))
                              + c2 * x**xpow * float(np.dot(poly2, th[: len(poly2)])))
        tol = tolerance if tolerance is not None else 1e-4
        method = f"log-fd(h={fd_step})"
    worst = float(np.max(np.abs(residuals)) / pmax)
    note = f", {excluded} origin point(s) excluded" if excluded else ""
    return VerificationReport(
        test_id=f"adjoint-ode[{spec.describe()}]",
        estimate=worst, standard_error=0.0, tolerance=tol,
        samples=len(grid), seed=0, passed=worst <= tol,
        details=f"order {ode.order}, {method}, grid [{grid[0]:g}, {grid[-1]:g}]{note}")


def density_handle(spec: ProductSpec):
    """Analytic density handle where the closed forms allow one."""
    if spec.q != 1:
        return None
    m, n, N = spec.m, spec.n, spec.N
    if m == 0 and n == 0 and N == 1:
        c = 1.0 / (2.0 * spec.sigma**2)
        k = 1.0 / math.sqrt(2.0 * math.pi) / spec.sigma
        return funcs.PolyExp([k], [0.0, 0.0, -c])
    if m == 0 and n == 0 and N == 2:
        k = 1.0 / (math.pi * spec.sigma)
        return funcs.BesselPowerComb([(k, 0.0, 0.0, "k")], 1.0 / spec.sigma, 1.0)
    if m == 0 and n == 2 and N == 0:
        r1, r2 = spec.gamma_shapes
        s = 0.5 * (r1 + r2)
        c = 2.0 * spec.lam ** (r1 + r2) / (math.gamma(r1) * math.gamma(r2))
        return funcs.BesselPowerComb([(c, s - 1.0, r1 - r2, "k")], 2.0 * spec.lam, 0.5)
    if m == 0 and n == 1 and N == 0:
        r = spec.gamma_shapes[0]
        if r == round(r):  # integer shape: polynomial prefactor
            k = spec.lam**r / math.gamma(r)
            return funcs.PolyExp([0.0] * (int(r) - 1) + [k], [0.0, -spec.lam])
    return None


# ---------------------------------------------------------------------------
# Mellin equality
# ---------------------------------------------------------------------------

def mellin_equality_scan(spec: ProductSpec, s_points) -> VerificationReport:
    """Factorised transform against the G-integral transform, in log space."""
    s_points = [float(s) for s in s_points]
    mel = dist.mellin(spec)
    worst = 0.0
    for s in s_points:
        lhs = mel.log_value(s)
        rhs = dist.mellin_gform_log(spec, s)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return VerificationReport(
        test_id=f"mellin-equality[{spec.describe()}]",
        estimate=worst, standard_error=0.0, tolerance=1e-10,
        samples=len(s_points), seed=0, passed=worst <= 1e-10,
        details=f"{len(s_points)} strip points")


# ---------------------------------------------------------------------------
# sampler / density agreement
# ---------------------------------------------------------------------------

def ks_statistic(samples: np.ndarray, cdf) -> float:
    xs = np.sort(np.asarray(samples))
    n = len(xs)
    f = cdf(xs)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(f - i / n)), np.max(np.abs(f - (i - 1) / n))))


def sampler_density_ks(spec: ProductSpec, samples: int, seed: int,
                       workers: int = 1) -> VerificationReport:
    """Kolmogorov-Smirnov distance between draws and the numeric CDF."""
    w = dist.sample(spec, samples, seed, workers=workers)
    cdf = dist.NumericCdf(spec)
    d = ks_statistic(w, cdf)
    crit = 1.63 / math.sqrt(samples)  # asymptotic 1% critical value
    return VerificationReport(
        test_id=f"sampler-ks[{spec.describe()}]",
        estimate=d, standard_error=0.0, tolerance=crit,
        samples=samples, seed=seed, passed=d <= crit,
        details="numeric CDF by panel quadrature")


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def standard_suite(spec: ProductSpec, samples: int = 200_000, seed: int = 1,
                   suites: tuple[str, ...] = ("stein", "adjoint", "mellin", "ks"),
                   workers: int = 1) -> list[VerificationReport]:
    reports = []
    if "stein" in suites:
        fam = default_family(spec)
        reports.append(mc_stein_identity(spec, fam, samples, seed, workers=workers))
    if "adjoint" in suites and spec.q == 1:
        handle = density_handle(spec)
        if spec.N >= 1:
            ev = dist.density(spec)
            hi = min(ev.tail_cut(25.0), 8.0)
            grid = np.linspace(0.2, max(hi, 1.0), 25)
        else:
            grid = np.geomspace(0.05, 10.0, 25)
        reports.append(adjoint_residual_scan(spec, grid, handle=handle))
    if "mellin" in suites and spec.q == 1:
        lo, _ = dist.mellin(spec).strip
        s_points = np.linspace(max(lo + 0.05, 0.2), max(lo + 0.05, 0.2) + 5.0, 20)
        reports.append(mellin_equality_scan(spec, s_points))
    if "ks" in suites and spec.q == 1:
        reports.append(sampler_density_ks(spec, min(samples, 100_000), seed,
                                          workers=workers))
    return reports
