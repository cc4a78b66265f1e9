"""Spectral heat semigroup, heat kernel, ultracontractivity and exponent fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .scale import TwoScaleFn, sigma_eval
from .spaces import MMSpace

__all__ = [
    "NegativeKernelError",
    "SpectralHeat",
    "spectral_decompose",
    "heat_kernel",
    "apply_semigroup",
    "VProfile",
    "ultracontractivity_profile",
    "HKEFit",
    "hke_fit",
    "WBEEstimate",
    "wbe_estimate",
    "spectrum_csv",
    "kernel_slice_csv",
]

# roundoff allowance for negative kernel entries, relative to the largest density scale
NEG_TOL = 1e-12


class NegativeKernelError(RuntimeError):
    """Heat kernel entries negative beyond roundoff: indicates an assembly bug."""


@dataclass(eq=False)
class SpectralHeat:
    """Eigendecomposition of ``L f(x) = (1/mu_x) sum_y c_xy (f(x) - f(y))``.

    ``phi[:, k]`` are mu-orthonormal eigenvectors, so
    ``p_t(x, y) = sum_k exp(-lambda_k t) phi_k(x) phi_k(y)``
    is the kernel density with respect to ``mu``.
    """

    space: MMSpace
    eigenvalues: np.ndarray
    phi: np.ndarray
    _weighted_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def mass(self) -> np.ndarray:
        return self.space.mass

    @property
    def spectral_gap(self) -> float:
        return float(self.eigenvalues[1])

    def kernel(self, t: float) -> np.ndarray:
        """Full ``(n, n)`` kernel density at time ``t > 0``."""
        if t <= 0:
            raise ValueError("t must be positive")
        w = np.exp(-self.eigenvalues * t)
        p = (self.phi * w) @ self.phi.T
        p = 0.5 * (p + p.T)
        return self._clamp(p, t)

    def _clamp(self, p: np.ndarray, t: float) -> np.ndarray:
        worst = float(p.min())
        if worst < 0:
            tol = NEG_TOL * max(1.0, float(np.max(1.0 / self.mass)))
            if worst < -tol:
                raise NegativeKernelError(
                    f"kernel entry {worst:.3e} at t={t:g} is below the roundoff threshold {-tol:.1e}")
            p = np.maximum(p, 0.0)
        return p

    def weighted_kernel(self, t: float) -> np.ndarray:
        """``mu_x p_t(x, y) mu_y`` (the transition measure of ``mu x mu``), cached per ``t``."""
        key = float(t)
        W = self._weighted_cache.get(key)
        if W is None:
            m = self.mass
            W = m[:, None] * self.kernel(t) * m[None, :]
            if len(self._weighted_cache) > 64:
                self._weighted_cache.clear()
            self._weighted_cache[key] = W
        return W

    def clear_cache(self) -> None:
        self._weighted_cache.clear()

    def apply(self, t: float, f: np.ndarray) -> np.ndarray:
        """``P_t f`` through the spectral coefficients ``<f, phi_k>_mu``."""
        f = np.asarray(f, float)
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return f.copy()
        coef = self.phi.T @ (self.mass[:, None] * f if f.ndim == 2 else self.mass * f)
        damp = np.exp(-self.eigenvalues * t)
        coef = coef * (damp[:, None] if f.ndim == 2 else damp)
        return self.phi @ coef

    def orthonormality_defect(self) -> float:
        G = self.phi.T @ (self.mass[:, None] * self.phi)
        return float(np.max(np.abs(G - np.eye(self.n))))


def spectral_decompose(X: MMSpace) -> SpectralHeat:
    """Dense symmetric eigendecomposition of the mu-weighted Laplacian.

    Solves ``M^{-1/2} K M^{-1/2} u = lambda u`` and returns ``phi = M^{-1/2} u``.
    """
    if not X.is_connected():
        raise ValueError("space is disconnected; the heat kernel would not be ergodic")
    K = X.laplacian().toarray()
    s = 1.0 / np.sqrt(X.mass)
    A = s[:, None] * K * s[None, :]
    A = 0.5 * (A + A.T)
    try:
        lam, U = linalg.eigh(A)
    except linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    # the zero eigenvalue comes out as +-1e-15; clip so exp(-lambda t) <= 1
    lam = np.maximum(lam, 0.0)
    phi = s[:, None] * U
    # sign convention for reproducible output: largest entry of each vector positive
    lead = phi[np.argmax(np.abs(phi), axis=0), np.arange(X.n)]
    phi = phi * np.where(lead < 0, -1.0, 1.0)
    return SpectralHeat(space=X, eigenvalues=lam, phi=phi)


def heat_kernel(H: SpectralHeat, t: float, x=None, y=None):
    """``p_t(x, y)``; full matrix when ``x`` and ``y`` are omitted."""
    p = H.kernel(t)
    if x is None and y is None:
        return p
    if y is None:
        return p[x]
    if x is None:
        return p[:, y]
    out = p[x, y]
    return float(out) if np.ndim(out) == 0 else out


def apply_semigroup(H: SpectralHeat, t: float, f: np.ndarray) -> np.ndarray:
    return H.apply(t, f)


# ---------------------------------------------------------------------------
# ultracontractivity
# ---------------------------------------------------------------------------

@dataclass
class VProfile:
    """``V(t) = 1 / max_{x,y} p_t(x, y)`` tabulated on a time grid.

    Between grid points ``V`` is taken as the step function from the left,
    which is the conservative choice for ``V`` nondecreasing.  ``V`` is
    extended by ``V(t_0)`` below the grid and by ``V(t_max)`` above it.
    """

    t: np.ndarray
    V: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, float)
        idx = np.searchsorted(self.t, s, side="right") - 1
        out = self.V[np.clip(idx, 0, self.t.size - 1)]
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        """``V^{-1}(y) = inf{t : V(t) > y}`` on the grid; ``inf`` if never exceeded."""
        y = np.atleast_1d(np.asarray(y, float))
        run = np.maximum.accumulate(self.V)
        idx = np.searchsorted(run, y, side="right")
        out = np.where(idx < self.t.size, self.t[np.minimum(idx, self.t.size - 1)], np.inf)
        return float(out[0]) if out.size == 1 else out

    @property
    def monotone_defect(self) -> float:
        """Largest relative decrease between consecutive grid values."""
        d = (self.V[:-1] - self.V[1:]) / self.V[:-1]
        return float(max(0.0, d.max())) if d.size else 0.0


def ultracontractivity_profile(H: SpectralHeat, t_grid: Sequence[float]) -> VProfile:
    ts = np.sort(np.asarray(t_grid, float))
    # the maximum of a positive semidefinite-in-time kernel sits on the diagonal
    V = np.array([1.0 / float(H.kernel(t).max()) for t in ts])
    return VProfile(t=ts, V=V)


# ---------------------------------------------------------------------------
# heat kernel estimate fits
# ---------------------------------------------------------------------------

@dataclass
class HKEFit:
    """On-diagonal two-slope fit and off-diagonal rate constants.

    ``slopes`` are the fitted ``d log p_t(x,x) / d log t`` below and above
    ``t = t_break``; ``alpha_over_beta = -slopes``.  When volume exponents are
    supplied, ``beta_hat = alpha / (alpha / beta)``.  ``c_lower``/``c_upper``
    bracket the off-diagonal exponential rates.
    """

    slopes: tuple
    alpha_over_beta: tuple
    beta_hat: Optional[tuple]
    on_diag_constants: tuple
    c_lower: float
    c_upper: float
    residual: float
    offdiag_residual: float
    t_break: float
    points: int
    window: tuple
    notes: list = field(default_factory=list)

    @property
    def slope(self) -> float:
        """Slope of a single-regime fit (the small-time slope)."""
        return self.slopes[0]


def hke_fit(H: SpectralHeat, t_grid: Sequence[float], points: Optional[Sequence[int]] = None,
            pairs: Optional[Sequence[tuple]] = None, beta: Optional[TwoScaleFn] = None,
            alpha: Optional[TwoScaleFn] = None, t_break: float = 1.0,
            window: Optional[tuple] = None) -> HKEFit:
    """Fit ``p_t(x, x) ~ sigma_{-a1/b1, -a2/b2}(t)`` with a continuous break at ``t_break``.

    The regression is ``log p = c + s1 * min(u, 0) + s2 * max(u, 0)`` with
    ``u = log(t / t_break)``, averaged over ``points``.  If every ``t`` in the
    window lies on one side of the break, a single slope is fitted and reused.
    For the off-diagonal part, with ``beta`` given, the exponent
    ``log(p_t(x,y) / p_t(x,x))`` is regressed against
    ``-t * sigma_{b2/(b2-1), b1/(b1-1)}(d/t)``.
    """
    ts = np.sort(np.asarray(t_grid, float))
    if ts.size < 3 or math.log10(ts[-1] / ts[0]) < 3.0 - 1e-9:
        raise ValueError("t_grid must span at least 3 decades")
    if window is not None:
        ts = ts[(ts >= window[0]) & (ts <= window[1])]
        if ts.size < 3:
            raise ValueError("fewer than 3 grid times inside the fit window")
    X = H.space
    pts = np.arange(X.n) if points is None else np.asarray(points)
    notes = []
    kernels = [H.kernel(t) for t in ts]
    diag = np.array([np.mean(np.log(np.diag(P)[pts])) for P in kernels])
    u = np.log(ts / t_break)
    below, above = np.minimum(u, 0.0), np.maximum(u, 0.0)
    if np.all(u <= 0) or np.all(u >= 0):
        A = np.stack([np.ones_like(u), u], axis=1)
        coef, *_ = np.linalg.lstsq(A, diag, rcond=None)
        s1 = s2 = float(coef[1])
        c0 = float(coef[0])
        notes.append("single regime: window on one side of the break")
    else:
        A = np.stack([np.ones_like(u), below, above], axis=1)
        if np.linalg.cond(A) > 1e10:
            notes.append("ill-conditioned on-diagonal regression")
        coef, *_ = np.linalg.lstsq(A, diag, rcond=None)
        c0, s1, s2 = map(float, coef)
    pred = c0 + s1 * below + s2 * above
    residual = float(np.sqrt(np.mean((diag - pred) ** 2)))
    aob = (-s1, -s2)
    beta_hat = None
    if alpha is not None:
        a1, a2 = alpha.exponents
        beta_hat = (a1 / aob[0] if aob[0] > 0 else math.inf, a2 / aob[1] if aob[1] > 0 else math.inf)
        beta_hat = tuple(max(1.0, b) for b in beta_hat)

    c_lo = c_hi = math.nan
    off_res = math.nan
    if beta is not None:
        rate = TwoScaleFn(beta.a_large / (beta.a_large - 1), beta.a_small / (beta.a_small - 1))
        if pairs is None:
            c = int(pts[len(pts) // 2]) if points is not None else X.center_point(X.core_mask())
            order = np.argsort(X.dist[c])
            far = order[X.dist[c][order] > 0]
            pick = far[np.linspace(0, far.size - 1, min(24, far.size)).astype(int)]
            pairs = [(c, int(y)) for y in pick]
        xs_, ys_ = np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
        d = X.dist[xs_, ys_]
        xs, ys = [], []
        for t, P in zip(ts, kernels):
            g = t * sigma_eval(rate, d / t)
            val = P[xs_, ys_]
            ok = (val > 0) & (g > 1.0)  # off-diagonal regime only
            ratio = np.log(val[ok] / np.sqrt(P[xs_[ok], xs_[ok]] * P[ys_[ok], ys_[ok]]))
            xs.extend(g[ok])
            ys.extend(-ratio)
        xs, ys = np.asarray(xs), np.asarray(ys)
        if xs.size >= 3:
            r = ys / xs
            c_lo, c_hi = float(r.min()), float(r.max())
            slope = float(np.sum(xs * ys) / np.sum(xs * xs))
            off_res = float(np.sqrt(np.mean((ys - slope * xs) ** 2)))
        else:
            notes.append("no pairs in the off-diagonal regime")
    return HKEFit(slopes=(s1, s2), alpha_over_beta=aob, beta_hat=beta_hat,
                  on_diag_constants=(math.exp(c0), math.exp(c0)), c_lower=c_lo, c_upper=c_hi,
                  residual=residual, offdiag_residual=off_res, t_break=t_break,
                  points=int(pts.size), window=(float(ts[0]), float(ts[-1])), notes=notes)


# ---------------------------------------------------------------------------
# weak Bakry-Emery
# ---------------------------------------------------------------------------

@dataclass
class WBEEstimate:
    constant: float
    argmax_t: float
    argmax_probe: int
    per_probe: np.ndarray
    skipped_constant: int


def wbe_estimate(H: SpectralHeat, probes: np.ndarray, t_grid: Sequence[float],
                 kappa: TwoScaleFn, beta: TwoScaleFn, mask: Optional[np.ndarray] = None) -> WBEEstimate:
    """Empirical weak Bakry-Emery constant.

    ``sup |P_t f(x) - P_t f(y)| sigma_{k1/b1,k2/b2}(t) / (sigma_kappa(d(x,y)) ||f||_inf)``
    over probes (columns of ``probes``), grid times and pairs with ``d > 0``.
    """
    F = np.atleast_2d(np.asarray(probes, float))
    if F.shape[0] != H.n:
        F = F.T
    X = H.space
    sel = np.arange(X.n) if mask is None else np.flatnonzero(mask)
    D = X.dist[np.ix_(sel, sel)]
    off = D > 0
    sd = np.where(off, sigma_eval(kappa, D), 1.0)
    time_scale = TwoScaleFn(kappa.a_small / beta.a_small, kappa.a_large / beta.a_large)
    sup = np.abs(F).max(axis=0)
    live = sup > 0
    best = np.zeros(F.shape[1])
    arg_t = np.zeros(F.shape[1])
    for t in t_grid:
        G = H.apply(float(t), F[:, live])[sel]
        st = sigma_eval(time_scale, float(t))
        for j, col in zip(np.flatnonzero(live), G.T):
            diff = np.abs(col[:, None] - col[None, :])
            # rounding leaves ~1e-16 differences for constants; ignore them
            diff = np.where(diff > 1e-13 * sup[j], diff, 0.0)
            val = float(np.max(np.where(off, diff / sd, 0.0))) * st / sup[j]
            if val > best[j]:
                best[j], arg_t[j] = val, float(t)
    k = int(np.argmax(best))
    return WBEEstimate(constant=float(best[k]), argmax_t=float(arg_t[k]), argmax_probe=k,
                       per_probe=best, skipped_constant=int(np.sum(~live)))


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def spectrum_csv(H: SpectralHeat) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "lambda"])
    for k, lam in enumerate(H.eigenvalues):
        w.writerow([k, repr(float(lam))])
    return buf.getvalue()


def kernel_slice_csv(H: SpectralHeat, t: float, x: int) -> str:
    p = H.kernel(t)[x]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "dist", "p_t"])
    for y in range(H.n):
        w.writerow([y, repr(float(H.space.dist[x, y])), repr(float(p[y]))])
    return buf.getvalue()
