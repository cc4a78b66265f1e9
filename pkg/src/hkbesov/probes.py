"""Deterministic probe fields used by every norm and inequality check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .heat import SpectralHeat

__all__ = ["ProbeFamily", "probe_family", "N_EIGEN", "N_BALLS", "N_RANDOM"]

N_EIGEN = 8
N_BALLS = 5
N_RANDOM = 10


@dataclass
class ProbeFamily:
    """Probe fields as columns of ``fields`` with matching ``ids``."""

    fields: np.ndarray
    ids: list

    def __len__(self) -> int:
        return self.fields.shape[1]

    def __iter__(self):
        for j, pid in enumerate(self.ids):
            yield pid, self.fields[:, j]

    def subset(self, prefix: str) -> "ProbeFamily":
        keep = [j for j, pid in enumerate(self.ids) if pid.startswith(prefix)]
        return ProbeFamily(self.fields[:, keep], [self.ids[j] for j in keep])

    def nonnegative(self) -> "ProbeFamily":
        """Shift every probe so its minimum is zero."""
        return ProbeFamily(self.fields - self.fields.min(axis=0), [f"{p}+" for p in self.ids])


def ball_radii(H: SpectralHeat, count: int = N_BALLS) -> np.ndarray:
    X = H.space
    lo = max(2.0 * X.min_distance, 0.05 * X.diameter)
    hi = 0.4 * X.diameter
    return np.geomspace(lo, max(hi, lo * 1.01), count)


def probe_family(H: SpectralHeat, seed: int = 0, mask: Optional[np.ndarray] = None,
                 smoothing_time: Optional[float] = None) -> ProbeFamily:
    """Eigenvector, ball-indicator and smoothed random probes.

    * the first ``N_EIGEN`` nonconstant eigenvectors scaled to sup norm 1;
    * indicators of open balls of ``N_BALLS`` radii around the most central
      point (radii between ``max(2 d_min, 0.05 diam)`` and ``0.4 diam``);
    * ``N_RANDOM`` standard normal fields smoothed by ``P_t0``,
      ``t0 = (median edge length)**2``, scaled to sup norm 1.

    With ``mask``, the centre is chosen inside the mask and every probe is
    set to zero outside it.
    """
    X = H.space
    n = X.n
    cols, ids = [], []
    k_max = min(N_EIGEN, n - 1)
    for k in range(1, k_max + 1):
        v = H.phi[:, k]
        cols.append(v / np.abs(v).max())
        ids.append(f"eig{k}")
    c = X.center_point(mask)
    for j, r in enumerate(ball_radii(H)):
        cols.append((X.dist[c] < r).astype(float))
        ids.append(f"ball{j}")
    rng = np.random.default_rng(seed)
    t0 = X.median_edge ** 2 if smoothing_time is None else smoothing_time
    noise = rng.standard_normal((n, N_RANDOM))
    smooth = H.apply(t0, noise)
    for j in range(N_RANDOM):
        v = smooth[:, j]
        cols.append(v / np.abs(v).max())
        ids.append(f"rand{j}")
    F = np.stack(cols, axis=1)
    if mask is not None:
        F = F * np.asarray(mask, float)[:, None]
    return ProbeFamily(F, ids)
