"""Two-scale power functions and the integral estimates built on them.

A two-scale function behaves like ``x**a_small`` on ``[0, 1]`` and like
``x**a_large`` on ``(1, inf)``.  Exponents are stored as exact rationals
(``fractions.Fraction`` of the machine float that was passed in), so sums,
products and quotients of exponents are computed without rounding and the
algebraic identities between derived scaling functions can be checked
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special

__all__ = [
    "TwoScaleFn",
    "sigma_eval",
    "sigma_inverse",
    "sigma_algebra_check",
    "SigmaAlgebraReport",
    "appendix_integral",
    "appendix_integral_bound",
    "IntegralBound",
    "appendix_dyadic_sum",
    "appendix_dyadic_sum_bound",
    "DyadicSumBound",
    "appendix_inverse_sigma_integral",
    "QuadratureError",
    "TruncationError",
]


class QuadratureError(RuntimeError):
    """Raised when composite quadrature fails to reach its tolerance."""


class TruncationError(RuntimeError):
    """Raised when a dyadic series does not decay within the term budget."""


def exact(value) -> Fraction:
    """Exact rational view of a number (the binary value for floats)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"exponent must be finite, got {value}")
    return Fraction(value)


@dataclass(frozen=True)
class TwoScaleFn:
    """``sigma_{a_small, a_large}(x) = x**a_small on [0,1], x**a_large on (1, inf)``.

    Exponents may be any finite reals; the function is an increasing
    homeomorphism of ``[0, inf)`` exactly when both are positive.
    """

    a_small: Fraction
    a_large: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a_small", exact(self.a_small))
        object.__setattr__(self, "a_large", exact(self.a_large))

    @classmethod
    def power(cls, a) -> "TwoScaleFn":
        return cls(a, a)

    @property
    def exponents(self) -> tuple[float, float]:
        return float(self.a_small), float(self.a_large)

    @property
    def is_increasing(self) -> bool:
        return self.a_small > 0 and self.a_large > 0

    @property
    def single_regime(self) -> bool:
        return self.a_small == self.a_large

    @property
    def min_exponent(self) -> Fraction:
        return min(self.a_small, self.a_large)

    @property
    def max_exponent(self) -> Fraction:
        return max(self.a_small, self.a_large)

    def __call__(self, x):
        return sigma_eval(self, x)

    def inverse(self) -> "TwoScaleFn":
        if not self.is_increasing:
            raise ValueError(f"{self.descriptor()} is not invertible on [0, inf)")
        return TwoScaleFn(1 / self.a_small, 1 / self.a_large)

    def __mul__(self, other: "TwoScaleFn") -> "TwoScaleFn":
        if not isinstance(other, TwoScaleFn):
            return NotImplemented
        return TwoScaleFn(self.a_small + other.a_small, self.a_large + other.a_large)

    def __truediv__(self, other: "TwoScaleFn") -> "TwoScaleFn":
        if not isinstance(other, TwoScaleFn):
            return NotImplemented
        return TwoScaleFn(self.a_small - other.a_small, self.a_large - other.a_large)

    def __pow__(self, q) -> "TwoScaleFn":
        q = exact(q)
        return TwoScaleFn(self.a_small * q, self.a_large * q)

    def compose(self, inner: "TwoScaleFn") -> "TwoScaleFn":
        """``self(inner(x))`` as a two-scale function.

        ``inner`` must be monotone (both exponents of one strict sign) so
        that it maps ``[0,1]`` onto ``[0,1]`` or onto ``[1, inf)``.
        """
        if inner.is_increasing:
            return TwoScaleFn(self.a_small * inner.a_small, self.a_large * inner.a_large)
        if inner.a_small < 0 and inner.a_large < 0:
            return TwoScaleFn(self.a_large * inner.a_small, self.a_small * inner.a_large)
        raise ValueError("inner function must be monotone")

    def reflect(self) -> "TwoScaleFn":
        """``x -> self(1/x)``."""
        return TwoScaleFn(-self.a_large, -self.a_small)

    def descriptor(self) -> str:
        return f"sigma:{float(self.a_small)!r},{float(self.a_large)!r}"

    def __repr__(self) -> str:
        return f"TwoScaleFn({float(self.a_small)!r}, {float(self.a_large)!r})"


def _as_nonneg(x, what="x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError(f"{what} must be nonnegative")
    return arr


def sigma_eval(f: TwoScaleFn, x):
    """Evaluate ``f`` at ``x >= 0`` (scalar or array)."""
    arr = _as_nonneg(x)
    a, b = f.exponents
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(arr <= 1.0, np.power(arr, a), np.power(arr, b))
    if out.ndim == 0:
        return float(out)
    return out


def sigma_inverse(f: TwoScaleFn, y):
    """Inverse of an increasing two-scale function at ``y >= 0``."""
    _as_nonneg(y, "y")
    return sigma_eval(f.inverse(), y)


def _log_sigma(f: TwoScaleFn, x: np.ndarray) -> np.ndarray:
    a, b = f.exponents
    lx = np.log(x)
    return np.where(x <= 1.0, a * lx, b * lx)


def _rel_defect(u, v) -> np.ndarray:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    scale = np.maximum(np.maximum(np.abs(u), np.abs(v)), np.finfo(float).tiny)
    return np.abs(u - v) / scale


@dataclass
class SigmaAlgebraReport:
    """Worst defects of the two-scale identities on a grid.

    Defects are relative (``|u - v| / max(|u|, |v|)``); the ratio-bound slack
    is measured in log space, so it is relative as well.  A negative slack
    means the bound was violated.
    """

    inverse_defect: float
    power_defect: float
    product_defect: float
    ratio_bound_slack: float
    exponent_identities_exact: bool
    details: dict = field(default_factory=dict)

    @property
    def max_defect(self) -> float:
        return max(self.inverse_defect, self.power_defect, self.product_defect,
                   max(0.0, -self.ratio_bound_slack))


def sigma_algebra_check(f: TwoScaleFn, g: TwoScaleFn, grid: Sequence[float],
                        powers: Sequence[float] = (0.5, 2.0, 3.0)) -> SigmaAlgebraReport:
    """Check the inverse, power, product and ratio-bound properties on ``grid``."""
    x = np.asarray(grid, dtype=float)
    if x.size == 0 or np.any(x <= 0):
        raise ValueError("grid must be nonempty with positive entries")

    inv = 0.0
    for fn in (f, g):
        if fn.is_increasing:
            inv = max(inv, float(np.max(_rel_defect(fn.inverse()(fn(x)), x))))
            inv = max(inv, float(np.max(_rel_defect(fn(fn.inverse()(x)), x))))

    pw = 0.0
    exact_ok = True
    for q in powers:
        lifted = f ** q
        exact_ok &= lifted.a_small == f.a_small * exact(q) and lifted.a_large == f.a_large * exact(q)
        pw = max(pw, float(np.max(_rel_defect(np.power(f(x), q), lifted(x)))))

    prod_fn = f * g
    exact_ok &= prod_fn.a_small == f.a_small + g.a_small
    exact_ok &= prod_fn.a_large == f.a_large + g.a_large
    prod = float(np.max(_rel_defect(f(x) * g(x), prod_fn(x))))

    slack = math.inf
    xs = np.sort(x)
    lr = np.log(xs)
    for fn in (f, g):
        ls = _log_sigma(fn, xs)
        lo, hi = float(fn.min_exponent), float(fn.max_exponent)
        # all pairs r <= R
        dlog_sigma = ls[None, :] - ls[:, None]
        dlog_x = lr[None, :] - lr[:, None]
        upper = np.triu(np.ones_like(dlog_x, dtype=bool))
        scale = np.maximum(1.0, np.abs(dlog_sigma))
        low_slack = (dlog_sigma - lo * dlog_x) / scale
        high_slack = (hi * dlog_x - dlog_sigma) / scale
        slack = min(slack, float(np.min(low_slack[upper])), float(np.min(high_slack[upper])))

    return SigmaAlgebraReport(
        inverse_defect=inv,
        power_defect=pw,
        product_defect=prod,
        ratio_bound_slack=slack,
        exponent_identities_exact=bool(exact_ok),
        details={"grid_size": int(x.size), "powers": list(map(float, powers))},
    )


# ---------------------------------------------------------------------------
# Appendix estimates
# ---------------------------------------------------------------------------

def _as_pair(value) -> TwoScaleFn:
    if isinstance(value, TwoScaleFn):
        return value
    a, b = value
    return TwoScaleFn(a, b)


def _offdiag_rate(beta1: float, beta2: float) -> TwoScaleFn:
    """Exponent pair of the off-diagonal decay, ``sigma_{b2/(b2-1), b1/(b1-1)}``."""
    if beta1 <= 1 or beta2 <= 1:
        raise ValueError("walk exponents must exceed 1")
    b1, b2 = exact(beta1), exact(beta2)
    return TwoScaleFn(b2 / (b2 - 1), b1 / (b1 - 1))


def _gauss_panels(edges: np.ndarray, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    v = (a + b) / 2 + half * nodes[None, :]
    w = half * weights[None, :]
    return v.ravel(), w.ravel()


def _panel_edges(lo: float, hi: float, breaks: Sequence[float], per_unit: float) -> np.ndarray:
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    edges = []
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((b - a) * per_unit)))
        edges.append(np.linspace(a, b, m + 1)[:-1])
    edges.append(np.array([pts[-1]]))
    return np.concatenate(edges)


def _upper_gamma_tail(a: float, K: float, q: float, U: float) -> float:
    """``int_U^inf u**(a-1) exp(-K u**q) du``."""
    s = a / q
    x = K * U ** q
    return float(special.gammaincc(s, x) * special.gamma(s) * K ** (-s) / q)


@dataclass
class QuadResult:
    value: float
    error: float
    lower_tail: float
    upper_tail: float

    @property
    def converged(self) -> bool:
        return self.error <= 1e-8 * max(abs(self.value), 1e-300)


def appendix_integral(alpha, beta1: float, beta2: float, C: float, t: float,
                      panels_per_decade: int = 8, order: int = 12,
                      exp_cut: float = 60.0) -> QuadResult:
    """``int_0^inf sigma_alpha(u) exp(-C t sigma_rate(u/t)) du/u`` by log-grid Gauss quadrature.

    The window starts ``1e-8`` below the diffusive length ``sigma_{1/b1,1/b2}(t)``
    (the piece below is bounded by ``int sigma_alpha du/u``) and ends where
    the exponent reaches ``exp_cut``; the remainder is the exact incomplete
    gamma tail.  The error estimate compares against half the panel count.
    """
    alpha = _as_pair(alpha)
    if not alpha.is_increasing:
        raise ValueError("volume exponents must be positive")
    if t <= 0 or C <= 0:
        raise ValueError("t and C must be positive")
    if panels_per_decade < 2:
        raise ValueError("panels_per_decade must be >= 2 for the error estimate")
    rate = _offdiag_rate(beta1, beta2)
    a1, a2 = alpha.exponents
    q_small, q_large = rate.exponents

    def log_integrand(v):
        u = np.exp(v)
        return _log_sigma(alpha, u) - C * t * sigma_eval(rate, u / t)

    length = float(sigma_eval(TwoScaleFn(1 / exact(beta1), 1 / exact(beta2)), t))
    u_lo = 1e-8 * length
    # exponent is increasing in u; march out until it exceeds exp_cut, past 1 and t
    U = max(length, 1.0, t) * 2.0
    while C * t * sigma_eval(rate, U / t) < exp_cut:
        U *= 2.0
    # lower piece: exp factor <= 1 there
    if u_lo <= 1.0:
        lower = u_lo ** a1 / a1
    else:
        lower = 1.0 / a1 + (u_lo ** a2 - 1.0) / a2
    # upper tail: u > max(1, t) so sigma_alpha uses a2 and the rate uses q_large
    K = C * t ** (1.0 - q_large)
    upper = _upper_gamma_tail(a2, K, q_large, U)

    def quad(per_decade):
        per_unit = per_decade / math.log(10.0)
        edges = _panel_edges(math.log(u_lo), math.log(U), [0.0, math.log(t)], per_unit)
        v, w = _gauss_panels(edges, order)
        return float(np.sum(w * np.exp(log_integrand(v))))

    fine = quad(panels_per_decade)
    coarse = quad(panels_per_decade // 2)
    value = fine + lower + upper
    return QuadResult(value=value, error=abs(fine - coarse), lower_tail=lower, upper_tail=upper)


@dataclass
class IntegralBound:
    t: np.ndarray
    integrals: np.ndarray
    ratios: np.ndarray
    errors: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.ratios))

    @property
    def inf(self) -> float:
        return float(np.min(self.ratios))

    @property
    def spread(self) -> float:
        return self.sup / self.inf


def appendix_integral_bound(alpha, beta1: float, beta2: float, C: float,
                            t_grid: Sequence[float], panels_per_decade: int = 8,
                            rtol: float = 1e-8) -> IntegralBound:
    """Ratio of the appendix integral to ``sigma_{a1/b1, a2/b2}(t)`` over ``t_grid``."""
    alpha = _as_pair(alpha)
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0):
        raise ValueError("t_grid must be positive")
    scale = TwoScaleFn(alpha.a_small / exact(beta1), alpha.a_large / exact(beta2))
    vals, errs = [], []
    for t in ts:
        res = appendix_integral(alpha, beta1, beta2, C, float(t), panels_per_decade)
        if res.error > rtol * abs(res.value):
            raise QuadratureError(
                f"quadrature at t={t:g} reached error {res.error:.3e} "
                f"(value {res.value:.6e}); increase panels_per_decade")
        vals.append(res.value)
        errs.append(res.error)
    vals = np.array(vals)
    return IntegralBound(t=ts, integrals=vals, ratios=vals / scale(ts), errors=np.array(errs))


def appendix_dyadic_sum(alpha, beta, nu, p: float, C: float, r: float, t: float,
                        max_terms: int = 100_000) -> float:
    """``sum_{k>=1} exp(-C t rate(2^-k r / t)) sigma_{nu*beta}(2^{1-k} r)^p sigma_alpha(2^{1-k} r)``.

    Summed in log space; stops once the terms are in their geometric tail and
    fall below ``1e-16`` of the partial sum.
    """
    alpha = _as_pair(alpha)
    beta = _as_pair(beta)
    nu = _as_pair(nu)
    b1, b2 = beta.exponents
    rate = _offdiag_rate(b1, b2)
    nub = TwoScaleFn(nu.a_small * beta.a_small, nu.a_large * beta.a_large)
    if r <= 0 or t <= 0:
        raise ValueError("r and t must be positive")
    length = float(sigma_eval(TwoScaleFn(1 / beta.a_small, 1 / beta.a_large), t))
    tail_start = min(1.0, t, length)
    log_cut = math.log(1e-16)

    log_sum = -math.inf
    for k in range(1, max_terms + 1):
        u = math.ldexp(r, -k)
        u2 = 2.0 * u
        log_term = (-C * t * float(sigma_eval(rate, u / t))
                    + p * float(_log_sigma(nub, np.array(u2)))
                    + float(_log_sigma(alpha, np.array(u2))))
        log_sum = np.logaddexp(log_sum, log_term)
        if u2 <= tail_start and log_term < log_sum + log_cut:
            return float(math.exp(log_sum))
        if u2 < 1e-300:
            return float(math.exp(log_sum))
    raise TruncationError(f"dyadic sum at r={r:g}, t={t:g} did not decay within {max_terms} terms")


@dataclass
class DyadicSumBound:
    r: np.ndarray
    t: np.ndarray
    sums: np.ndarray
    ratios: np.ndarray  # shape (len(r), len(t))

    @property
    def sup(self) -> float:
        return float(np.max(self.ratios))


def appendix_dyadic_sum_bound(alpha, beta, nu, p: float, C: float,
                              r_grid: Sequence[float], t_grid: Sequence[float]) -> DyadicSumBound:
    """Ratio of the dyadic sum to ``sigma_{a/b}(t) sigma_nu(t)^p`` on an ``(r, t)`` grid."""
    alpha = _as_pair(alpha)
    beta = _as_pair(beta)
    nu = _as_pair(nu)
    if p < 1:
        raise ValueError("p must be >= 1")
    rs = np.asarray(r_grid, float)
    ts = np.asarray(t_grid, float)
    vol_time = TwoScaleFn(alpha.a_small / beta.a_small, alpha.a_large / beta.a_large)
    sums = np.array([[appendix_dyadic_sum(alpha, beta, nu, p, C, r, t) for t in ts] for r in rs])
    denom = vol_time(ts) * nu(ts) ** p
    return DyadicSumBound(r=rs, t=ts, sums=sums, ratios=sums / denom[None, :])


def appendix_inverse_sigma_integral(nu, t: float) -> tuple[float, float]:
    """``int_0^t du / sigma_nu(u)`` in closed form and its ratio to ``sigma_{1-nu1, 1-nu2}(t)``.

    Only the convergent range ``0 < nu_i < 1`` is supported.
    """
    nu = _as_pair(nu)
    n1, n2 = nu.exponents
    for name, v in (("nu1", n1), ("nu2", n2)):
        if not 0.0 < v < 1.0:
            raise ValueError(
                f"{name}={v} outside (0, 1): int_0^t u^(-{name}) du diverges at 0 for "
                f"{name} >= 1; this estimate is only meaningful for exponents in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    if t <= 1.0:
        integral = t ** (1.0 - n1) / (1.0 - n1)
    else:
        integral = 1.0 / (1.0 - n1) + (t ** (1.0 - n2) - 1.0) / (1.0 - n2)
    bound = float(sigma_eval(TwoScaleFn(1 - nu.a_small, 1 - nu.a_large), t))
    return integral, integral / bound
