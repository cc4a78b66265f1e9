"""Finite metric measure spaces carrying a Dirichlet form.

Every space is a connected weighted graph: point masses ``mu``, edge
conductances ``c`` and edge lengths.  Distances are graph geodesics in the
edge-length metric.  Balls are open, ``B(x, r) = {y : d(x, y) < r}``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .scale import TwoScaleFn

__all__ = [
    "MAX_POINTS",
    "MMSpace",
    "SpaceExponents",
    "ExponentError",
    "SizeError",
    "build_cycle",
    "build_path",
    "build_gasket",
    "build_cable_gasket",
    "build_product",
    "gasket_size",
    "VolumeFit",
    "volume_growth_fit",
    "doubling_check",
]

MAX_POINTS = 4096


class SizeError(ValueError):
    """Requested space exceeds the dense-eigensolver budget."""


class ExponentError(ValueError):
    """Exponents violate a structural constraint."""


@dataclass(frozen=True)
class SpaceExponents:
    """Volume (alpha), walk (beta) and weak Bakry-Emery (kappa) exponent pairs."""

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2", "kappa1", "kappa2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ExponentError(f"{name} must be a positive real, got {v}")

    @classmethod
    def single(cls, alpha: float, beta: float, kappa: float) -> "SpaceExponents":
        return cls(alpha, alpha, beta, beta, kappa, kappa)

    @property
    def alpha(self) -> TwoScaleFn:
        return TwoScaleFn(self.alpha1, self.alpha2)

    @property
    def beta(self) -> TwoScaleFn:
        return TwoScaleFn(self.beta1, self.beta2)

    @property
    def kappa(self) -> TwoScaleFn:
        return TwoScaleFn(self.kappa1, self.kappa2)

    def validate_hke(self) -> None:
        """Reject exponents incompatible with sub-Gaussian heat kernel bounds."""
        bad = []
        for i, (a, b) in enumerate(((self.alpha1, self.beta1), (self.alpha2, self.beta2)), 1):
            if not 2.0 - 1e-12 <= b <= 1.0 + a + 1e-12:
                bad.append(f"beta{i}={b:g} with alpha{i}={a:g}")
        if bad:
            raise ExponentError("heat kernel estimates need 2≤βᵢ≤1+αᵢ; violated by " + ", ".join(bad))

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("alpha1", "alpha2", "beta1", "beta2", "kappa1", "kappa2")}

    def with_kappa(self, k1: float, k2: float) -> "SpaceExponents":
        return replace(self, kappa1=k1, kappa2=k2)


@dataclass(frozen=True, eq=False)
class MMSpace:
    """Finite metric measure space with a conductance graph.

    Attributes:
        dist: symmetric ``(n, n)`` geodesic distance matrix.
        mass: point masses ``mu_i > 0``.
        edges: ``(m, 2)`` integer array of undirected edges ``i < j``.
        conductance: ``(m,)`` positive edge weights ``c_ij``.
        length: ``(m,)`` positive edge lengths.
        boundary: indices of points on an artificial truncation boundary.
    """

    dist: np.ndarray
    mass: np.ndarray
    edges: np.ndarray
    conductance: np.ndarray
    length: np.ndarray
    name: str = "space"
    labels: Optional[list] = None
    boundary: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.mass.size)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    @property
    def min_edge(self) -> float:
        return float(self.length.min())

    @property
    def median_edge(self) -> float:
        return float(np.median(self.length))

    @property
    def min_distance(self) -> float:
        return float(self.dist[self.dist > 0].min())

    def ball_masses(self, r: float, centers=None) -> np.ndarray:
        """``mu(B(x, r))`` for open balls around ``centers`` (default all points)."""
        d = self.dist if centers is None else self.dist[np.asarray(centers)]
        return (d < r) @ self.mass

    def laplacian(self) -> sparse.csr_matrix:
        """Symmetric energy matrix ``K`` with ``E(f, f) = f^T K f``; the generator is ``M^{-1} K``."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        c = self.conductance
        n = self.n
        off = sparse.coo_matrix((np.concatenate([-c, -c]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                                shape=(n, n)).tocsr()
        deg = -np.asarray(off.sum(axis=1)).ravel()
        return (off + sparse.diags(deg)).tocsr()

    def energy(self, f: np.ndarray) -> float:
        f = np.asarray(f, float)
        d = f[self.edges[:, 0]] - f[self.edges[:, 1]]
        return float(np.sum(self.conductance * d * d))

    def is_connected(self) -> bool:
        ncomp, _ = csgraph.connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    def adjacency(self, weights: str = "conductance") -> sparse.csr_matrix:
        w = self.conductance if weights == "conductance" else self.length
        i, j = self.edges[:, 0], self.edges[:, 1]
        return sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                                 shape=(self.n, self.n)).tocsr()

    def normalized(self) -> "MMSpace":
        """Copy with total mass 1 and the same generator.

        Masses and conductances are scaled by the same factor, so ``P_t`` is
        unchanged while the kernel density scales inversely.
        """
        s = 1.0 / self.total_mass
        return replace(self, mass=self.mass * s, conductance=self.conductance * s,
                       name=self.name, meta={**self.meta, "normalized": True})

    def core_mask(self, fraction: float = 0.2) -> np.ndarray:
        """Points at distance at least ``fraction * diameter`` from the truncation boundary."""
        if not self.boundary:
            return np.ones(self.n, dtype=bool)
        return self.far_from(self.boundary, fraction)

    def far_from(self, points, fraction: float) -> np.ndarray:
        """Points at distance at least ``fraction * diameter`` from every index in ``points``."""
        d = self.dist[list(points)].min(axis=0)
        return d >= fraction * self.diameter

    def center_point(self, mask: Optional[np.ndarray] = None) -> int:
        """Point minimizing eccentricity, restricted to ``mask``."""
        ecc = self.dist.max(axis=1)
        if mask is not None:
            ecc = np.where(mask, ecc, np.inf)
        return int(np.argmin(ecc))

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        points = self.labels if self.labels is not None else list(range(self.n))
        edges = [[int(i), int(j), float(c), float(l)]
                 for (i, j), c, l in zip(self.edges, self.conductance, self.length)]
        out = {"name": self.name, "points": _jsonable(points), "edges": edges,
               "mass": [float(m) for m in self.mass]}
        if self.boundary:
            out["boundary"] = [int(b) for b in self.boundary]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MMSpace":
        for key in ("points", "edges", "mass"):
            if key not in data:
                raise ValueError(f"space JSON lacks '{key}'")
        mass = np.asarray(data["mass"], float)
        e = np.asarray(data["edges"], float).reshape(-1, 4)
        if len(data["points"]) != mass.size:
            raise ValueError("points and mass have different lengths")
        edges = e[:, :2].astype(int)
        return from_edges(edges, e[:, 2], e[:, 3], mass, name=data.get("name", "json"),
                          labels=list(data["points"]), boundary=tuple(data.get("boundary", ())))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "MMSpace":
        return cls.from_json(json.loads(Path(path).read_text()))


def _jsonable(points):
    out = []
    for p in points:
        if isinstance(p, (tuple, list)):
            out.append([_jsonable([q])[0] for q in p])
        elif isinstance(p, (np.integer,)):
            out.append(int(p))
        elif isinstance(p, (np.floating,)):
            out.append(float(p))
        else:
            out.append(p)
    return out


def from_edges(edges, conductance, length, mass, name="space", labels=None,
               boundary=(), meta=None, dist=None) -> MMSpace:
    """Assemble an ``MMSpace``, computing geodesic distances unless given."""
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    conductance = np.asarray(conductance, float)
    length = np.asarray(length, float)
    mass = np.asarray(mass, float)
    n = mass.size
    if n > MAX_POINTS:
        raise SizeError(f"{n} points exceed the limit of {MAX_POINTS}")
    if np.any(mass <= 0) or not np.all(np.isfinite(mass)):
        raise ValueError("masses must be positive and finite")
    if np.any(conductance <= 0) or np.any(length <= 0):
        raise ValueError("conductances and lengths must be positive")
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ValueError("edge endpoint out of range")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise ValueError("self loops are not allowed")
    # canonical orientation and order, which also makes output deterministic
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((hi, lo))
    edges = np.stack([lo, hi], axis=1)[order]
    conductance, length = conductance[order], length[order]
    space = MMSpace(dist=np.zeros((0, 0)), mass=mass, edges=edges, conductance=conductance,
                    length=length, name=name, labels=labels, boundary=tuple(boundary), meta=meta or {})
    if not space.is_connected():
        raise ValueError("conductance graph is not connected")
    if dist is None:
        dist = csgraph.shortest_path(space.adjacency("length"), method="D", directed=False)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    object.__setattr__(space, "dist", dist)
    return space


def build_cycle(n: int, edge_length: float = 1.0) -> MMSpace:
    """``n``-cycle with masses ``h`` and conductances ``1/h`` (``h = edge_length``).

    The generator is the second-difference operator ``(2f(x) - f(x-1) - f(x+1))/h^2``.
    """
    if n < 3:
        raise ValueError("a cycle needs at least 3 points")
    if edge_length <= 0:
        raise ValueError("edge_length must be positive")
    if n > MAX_POINTS:
        raise SizeError(f"{n} points exceed the limit of {MAX_POINTS}")
    h = float(edge_length)
    i = np.arange(n)
    edges = np.stack([i, (i + 1) % n], axis=1)
    k = np.minimum(np.abs(i[:, None] - i[None, :]), n - np.abs(i[:, None] - i[None, :]))
    return from_edges(edges, np.full(n, 1.0 / h), np.full(n, h), np.full(n, h),
                      name=f"cycle:{n}", dist=k * h,
                      meta={"builder": "cycle", "n": n, "edge_length": h})


def build_path(n: int, edge_length: float = 1.0) -> MMSpace:
    """Path of ``n`` points; end points carry half mass (Neumann ends)."""
    if n < 2:
        raise ValueError("a path needs at least 2 points")
    h = float(edge_length)
    i = np.arange(n - 1)
    mass = np.full(n, h)
    mass[[0, -1]] = h / 2
    idx = np.arange(n)
    return from_edges(np.stack([i, i + 1], axis=1), np.full(n - 1, 1.0 / h), np.full(n - 1, h), mass,
                      name=f"path:{n}", dist=np.abs(idx[:, None] - idx[None, :]) * h,
                      meta={"builder": "path", "n": n, "edge_length": h})


def gasket_size(level: int) -> int:
    """Vertex count of the level-``level`` gasket graph."""
    return (3 ** (level + 1) + 3) // 2


def _gasket_cells(depth: int):
    """Vertices (axial lattice coordinates) and smallest triangles of the depth-``depth`` gasket."""
    side = 2 ** depth
    cells = [((0, 0), (side, 0), (0, side))]
    for _ in range(depth):
        nxt = []
        for a, b, c in cells:
            ab = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
            ac = ((a[0] + c[0]) // 2, (a[1] + c[1]) // 2)
            bc = ((b[0] + c[0]) // 2, (b[1] + c[1]) // 2)
            nxt.extend([(a, ab, ac), (ab, b, bc), (ac, bc, c)])
        cells = nxt
    verts = sorted({v for cell in cells for v in cell})
    index = {v: k for k, v in enumerate(verts)}
    return verts, index, cells


def build_gasket(level: int, blowup: int = 0, mass_weight: float = 1.0 / 3.0,
                 resistance_factor: float = 5.0 / 3.0) -> MMSpace:
    """Sierpinski gasket graph, optionally a truncated blow-up.

    The level-``level + blowup`` graph is built with edge length ``2**-level``,
    so the top cell of a non-blown-up gasket has diameter 1 and each blow-up
    doubles the diameter.  Each smallest cell has mass ``mass_weight**level``,
    split equally among its three corners; conductances are
    ``resistance_factor**level``.  For ``blowup > 0`` the gasket is viewed
    from the corner at the origin and the two far corners form the truncation
    boundary.
    """
    if level < 1 or blowup < 0:
        raise ValueError("level must be >= 1 and blowup >= 0")
    depth = level + blowup
    if gasket_size(depth) > MAX_POINTS:
        raise SizeError(f"gasket level {level} with blowup {blowup} has {gasket_size(depth)} "
                        f"points, above the limit of {MAX_POINTS}")
    verts, index, cells = _gasket_cells(depth)
    mass = np.zeros(len(verts))
    cell_mass = mass_weight ** level
    edges = set()
    for cell in cells:
        ids = [index[v] for v in cell]
        for k in ids:
            mass[k] += cell_mass / 3.0
        for p, q in ((0, 1), (1, 2), (0, 2)):
            e = (min(ids[p], ids[q]), max(ids[p], ids[q]))
            edges.add(e)
    edges = np.array(sorted(edges))
    h = 2.0 ** (-level)
    m = len(edges)
    side = 2 ** depth
    corners = [index[(0, 0)], index[(side, 0)], index[(0, side)]]
    boundary = tuple(corners[1:]) if blowup > 0 else ()
    return from_edges(edges, np.full(m, resistance_factor ** level), np.full(m, h), mass,
                      name=f"gasket:{level},{blowup}" if blowup else f"gasket:{level}",
                      labels=[list(v) for v in verts], boundary=boundary,
                      meta={"builder": "gasket", "level": level, "blowup": blowup,
                            "mass_weight": mass_weight, "resistance_factor": resistance_factor,
                            "corners": corners})


def build_cable_gasket(level: int, segments: int = 4) -> MMSpace:
    """Cable system of the level-``level`` gasket graph with unit-length cables.

    Every gasket edge becomes a path of ``segments`` pieces of length
    ``1/segments`` carrying Lebesgue measure and unit-resistance-per-length
    conductance.  Below unit scale the space is one dimensional; above it,
    it looks like a gasket of diameter ``2**level``.
    """
    if level < 1 or segments < 1:
        raise ValueError("level and segments must be >= 1")
    n_v = gasket_size(level)
    verts, index, cells = _gasket_cells(level)
    gedges = sorted({(min(index[c[p]], index[c[q]]), max(index[c[p]], index[c[q]]))
                     for c in cells for p, q in ((0, 1), (1, 2), (0, 2))})
    n = n_v + len(gedges) * (segments - 1)
    if n > MAX_POINTS:
        raise SizeError(f"cable gasket has {n} points, above the limit of {MAX_POINTS}")
    h = 1.0 / segments
    mass = np.zeros(n)
    edges = []
    nxt = n_v
    labels = [list(v) for v in verts]
    for a, b in gedges:
        chain = [a] + list(range(nxt, nxt + segments - 1)) + [b]
        for k in range(1, segments):
            labels.append([a, b, k])
        nxt += segments - 1
        for p, q in zip(chain[:-1], chain[1:]):
            edges.append((p, q))
            mass[p] += h / 2
            mass[q] += h / 2
    edges = np.array(edges)
    return from_edges(edges, np.full(len(edges), 1.0 / h), np.full(len(edges), h), mass,
                      name=f"cablegasket:{level},{segments}", labels=labels,
                      meta={"builder": "cablegasket", "level": level, "segments": segments})


def build_product(X: MMSpace, copies: int) -> MMSpace:
    """``copies``-fold product with the l1 distance and product measure.

    An edge joins points differing in a single coordinate ``i`` along a factor
    edge; its conductance is ``c * prod_{j != i} mu_{x_j}``, which makes the
    generator the Kronecker sum of the factor generators, so the product heat
    kernel is the product of factor kernels.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if copies == 1:
        return X
    n = X.n ** copies
    if n > MAX_POINTS:
        raise SizeError(f"product has {n} points, above the limit of {MAX_POINTS}")
    shape = (X.n,) * copies
    grids = np.indices(shape).reshape(copies, -1).T  # row k = multi-index of point k
    mass = np.prod(X.mass[grids], axis=1)
    dist = np.zeros((n, n))
    for i in range(copies):
        dist += X.dist[np.ix_(grids[:, i], grids[:, i])]
    edges, cond, length = [], [], []
    strides = [X.n ** (copies - 1 - i) for i in range(copies)]
    for i in range(copies):
        others = [j for j in range(copies) if j != i]
        for rest in itertools.product(range(X.n), repeat=copies - 1):
            base = sum(r * strides[j] for r, j in zip(rest, others))
            w = float(np.prod([X.mass[r] for r in rest]))
            for (a, b), c, l in zip(X.edges, X.conductance, X.length):
                edges.append((base + a * strides[i], base + b * strides[i]))
                cond.append(c * w)
                length.append(l)
    boundary = sorted({int(k) for k in range(n) if any(g in X.boundary for g in grids[k])})
    return from_edges(edges, cond, length, mass, name=f"{X.name}^{copies}",
                      labels=[list(map(int, g)) for g in grids], dist=dist,
                      boundary=tuple(boundary),
                      meta={"builder": "product", "factor": X.name, "copies": copies})


# ---------------------------------------------------------------------------
# volume growth
# ---------------------------------------------------------------------------

@dataclass
class RegimeFit:
    available: bool
    slope: float = math.nan
    constant: float = math.nan
    residual: float = math.nan
    radii: int = 0


@dataclass
class VolumeFit:
    """Log-log slopes of the mean ball volume below and above ``r_split``."""

    small: RegimeFit
    large: RegimeFit
    r_split: float
    radii: np.ndarray
    mean_log_volume: np.ndarray

    @property
    def alpha1_hat(self) -> float:
        return self.small.slope

    @property
    def alpha2_hat(self) -> float:
        return self.large.slope


def _fit_line(x, y) -> RegimeFit:
    if x.size < 3:
        return RegimeFit(available=False, radii=int(x.size))
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return RegimeFit(available=True, slope=float(coef[0]), constant=float(math.exp(coef[1])),
                     residual=float(np.sqrt(np.mean(resid ** 2))), radii=int(x.size))


def volume_growth_fit(X: MMSpace, r_split: Optional[float] = None, n_radii: int = 40,
                      centers: Optional[Sequence[int]] = None, r_range=None) -> VolumeFit:
    """Split log-log regression of ``mu(B(x, r))`` averaged over base points.

    Radii run log-uniformly over ``[2 * min_edge, diameter / 2]`` unless
    ``r_range`` is given; below twice the smallest edge balls are degenerate.
    A regime with fewer than three radii is reported as unavailable.
    """
    lo, hi = r_range if r_range is not None else (2.0 * X.min_edge, X.diameter / 2.0)
    if not 0 < lo < hi:
        raise ValueError("empty radius range")
    if r_split is None:
        r_split = math.sqrt(lo * hi)
    radii = np.logspace(math.log10(lo), math.log10(hi), n_radii)
    c = np.arange(X.n) if centers is None else np.asarray(centers)
    d = X.dist[c]
    logs = np.array([np.mean(np.log((d < r) @ X.mass)) for r in radii])
    lr = np.log(radii)
    small = radii < r_split
    return VolumeFit(small=_fit_line(lr[small], logs[small]), large=_fit_line(lr[~small], logs[~small]),
                     r_split=float(r_split), radii=radii, mean_log_volume=logs)


def doubling_check(X: MMSpace, n_radii: int = 30) -> tuple[float, float]:
    """Largest ``mu(B(x, 2r)) / mu(B(x, r))`` over all points and a log-grid of radii.

    Returns the constant and the radius where it is attained.
    """
    radii = np.logspace(math.log10(X.min_distance), math.log10(X.diameter), n_radii)
    best, arg = 0.0, radii[0]
    for r in radii:
        ratio = float(np.max(X.ball_masses(2 * r) / X.ball_masses(r)))
        if ratio > best:
            best, arg = ratio, r
    return best, float(arg)
