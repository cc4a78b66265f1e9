"""Korevaar-Schoen ball energies and their comparison with heat Besov seminorms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .besov_bv import TGrid, as_scale, besov_seminorm
from .heat import SpectralHeat
from .scale import TwoScaleFn, sigma_eval
from .spaces import MMSpace

__all__ = ["RGrid", "KSEnergy", "ks_energy", "ks_seminorm", "EquivalenceResult", "equivalence_check"]


@dataclass(frozen=True)
class RGrid:
    """Sorted positive radii, all strictly above the smallest positive distance."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, float)
        if r.ndim != 1 or r.size < 1 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("RGrid needs positive increasing radii")
        object.__setattr__(self, "r", r)

    @classmethod
    def log(cls, r_min: float, r_max: float, points: int = 30) -> "RGrid":
        return cls(np.geomspace(r_min, r_max, points))

    @classmethod
    def coupled(cls, tgrid: TGrid, beta: TwoScaleFn, X: MMSpace) -> "RGrid":
        """``r = sigma_{1/b1, 1/b2}(t)`` for grid times, keeping ``d_min < r <= diameter``.

        An open ball of radius ``r <= d_min`` contains only its centre, so
        those radii carry no information.
        """
        r = sigma_eval(beta.inverse(), tgrid.t)
        dmin = X.min_distance
        keep = (r > dmin * (1 + 1e-12)) & (r <= X.diameter * (1 + 1e-12))
        if not np.any(keep):
            raise ValueError("no coupled radius lies inside the distance span")
        return cls(np.unique(r[keep]))

    def validate_for(self, X: MMSpace) -> None:
        if self.r[0] < X.min_distance:
            raise ValueError(f"r_min={self.r[0]:g} is below the smallest distance {X.min_distance:g}")

    def __len__(self) -> int:
        return self.r.size


@dataclass
class KSEnergy:
    value: np.ndarray
    empty_balls: int
    degenerate: bool


def ks_energy(X: MMSpace, f, p: float, psi, r: float, mask: Optional[np.ndarray] = None) -> KSEnergy:
    """``Psi(r)^-p sum_y mu_y mean_{B(y,r)} |f - f(y)|^p`` for each column of ``f``.

    The ball average uses the open ball including its centre.  With ``mask``
    only points in the mask serve as centres and ball members; a centre
    whose masked ball is empty contributes 0 and is counted.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if r <= 0:
        raise ValueError("r must be positive")
    F = np.asarray(f, float)
    F = F[:, None] if F.ndim == 1 else F
    B = X.dist < r
    if mask is not None:
        m = np.asarray(mask, bool)
        B = B & m[None, :] & m[:, None]
    Bw = B * X.mass[None, :]
    vol = Bw.sum(axis=1)
    empty = vol <= 0
    weight = np.where(empty, 0.0, X.mass / np.where(empty, 1.0, vol))
    out = np.empty(F.shape[1])
    for j in range(F.shape[1]):
        col = F[:, j]
        D = np.abs(col[None, :] - col[:, None])
        if p != 1:
            D = D ** p
        out[j] = float(weight @ np.sum(Bw * D, axis=1))
    psi_r = float(as_scale(psi)(r))
    if psi_r <= 0:
        raise ValueError("Psi(r) must be positive")
    degenerate = bool(np.all(B.sum(axis=1) <= 1))
    return KSEnergy(value=out / psi_r ** p, empty_balls=int(empty.sum()), degenerate=degenerate)


def ks_seminorm(X: MMSpace, f, p: float, psi, grid: RGrid, mask=None):
    """``(sup_r E_{p,Psi}(f, r))^{1/p}`` over the grid and the maximizing radius.

    Returns ``(value, argmax_r)`` for one field and arrays for several.
    """
    E = np.stack([ks_energy(X, f, p, psi, float(r), mask).value for r in grid.r])
    k = np.argmax(E, axis=0)
    sup = E[k, np.arange(E.shape[1])]
    val = sup ** (1.0 / p)
    if np.ndim(f) == 1:
        return float(val[0]), float(grid.r[k[0]])
    return val, grid.r[k]


@dataclass
class EquivalenceResult:
    """Per-probe ratios ``||f||_{p,sigma_nu}^p / sup_r E_{p, sigma_{nu beta}}(f, r)``."""

    ratio_low: float
    ratio_high: float
    ratios: np.ndarray
    besov: np.ndarray
    ks: np.ndarray
    excluded: list = field(default_factory=list)

    @property
    def spread(self) -> float:
        return self.ratio_high / self.ratio_low


def equivalence_check(F, p: float, nu: TwoScaleFn, beta: TwoScaleFn, H: SpectralHeat,
                      tgrid: TGrid, rgrid: Optional[RGrid] = None, ids: Optional[Sequence[str]] = None,
                      mask=None) -> EquivalenceResult:
    """Empirical two-sided bracket between Besov and Korevaar-Schoen seminorms.

    The Besov side uses ``h = sigma_nu``; the ball side uses
    ``Psi = sigma_{nu1 b1, nu2 b2}``.  Fields (effectively) constant on both
    sides are excluded.
    """
    F = np.asarray(F, float)
    F = F[:, None] if F.ndim == 1 else F
    X = H.space
    if rgrid is None:
        rgrid = RGrid.coupled(tgrid, beta, X)
    psi = TwoScaleFn(nu.a_small * beta.a_small, nu.a_large * beta.a_large)
    semi = besov_seminorm(F, p, nu, H, tgrid)
    besov = semi.value ** p
    ks = np.stack([ks_energy(X, F, p, psi, float(r), mask).value for r in rgrid.r]).max(axis=0)
    ids = list(ids) if ids is not None else [str(j) for j in range(F.shape[1])]
    ok = (besov > 1e-300) & (ks > 1e-300)
    excluded = [ids[j] for j in np.flatnonzero(~ok)]
    if not np.any(ok):
        raise ValueError("every probe has a vanishing seminorm")
    ratios = np.full(F.shape[1], math.nan)
    ratios[ok] = besov[ok] / ks[ok]
    return EquivalenceResult(ratio_low=float(np.nanmin(ratios)), ratio_high=float(np.nanmax(ratios)),
                             ratios=ratios, besov=besov, ks=ks, excluded=excluded)
