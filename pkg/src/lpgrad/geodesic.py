"""Geodesic distance on a conformal surface via first-order fast marching.

The Riemannian distance from a source solves the eikonal equation
|grad_e d| = lambda (arc length is ds = lambda |dx|).  A first-order upwind
scheme on a Cartesian lattice is marched with an indexed binary heap; it is
monotone, so lambda <= mu pointwise implies the computed distances satisfy
d_lambda <= d_mu node by node.  First order is a deliberate choice: the
factor is merely C^1-small across blend annuli and robustness beats order.

The module also builds greedy maximal R/2-separated coverings and measures
their ball-overlap count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidArgument, InvalidSurface, OutOfDomain
from .quadrature import GeodesicBall, Rectangle


@njit(cache=True)
def _heap_less(key, heap, a, b):
    ka, kb = key[heap[a]], key[heap[b]]
    if ka != kb:
        return ka < kb
    return heap[a] < heap[b]


@njit(cache=True)
def _sift_up(heap, pos, key, i):
    while i > 0:
        p = (i - 1) // 2
        if _heap_less(key, heap, i, p):
            heap[p], heap[i] = heap[i], heap[p]
            pos[heap[p]] = p
            pos[heap[i]] = i
            i = p
        else:
            break


@njit(cache=True)
def _sift_down(heap, pos, key, i, size):
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < size and _heap_less(key, heap, l, m):
            m = l
        if r < size and _heap_less(key, heap, r, m):
            m = r
        if m == i:
            break
        heap[m], heap[i] = heap[i], heap[m]
        pos[heap[m]] = m
        pos[heap[i]] = i
        i = m


@njit(cache=True)
def _march_kernel(speed, h, init_nodes, init_vals, stop_value):
    """Upwind fast marching of (d-a)^2 + (d-b)^2 = (h*lambda)^2.

    speed is the conformal factor on an (nx, ny) lattice; init nodes carry
    seed distances.  Nodes whose distance would exceed stop_value are left
    at +inf.
    """
    nx, ny = speed.shape
    n = nx * ny
    dist = np.full(n, np.inf)
    state = np.zeros(n, np.uint8)
    pos = np.full(n, -1, np.int64)
    heap = np.empty(n, np.int64)
    size = 0

    for k in range(init_nodes.shape[0]):
        node = init_nodes[k]
        v = init_vals[k]
        if v < dist[node]:
            dist[node] = v
            if pos[node] == -1:
                heap[size] = node
                pos[node] = size
                size += 1
                _sift_up(heap, pos, dist, size - 1)
            else:
                _sift_up(heap, pos, dist, pos[node])

    while size > 0:
        node = heap[0]
        d0 = dist[node]
        size -= 1
        heap[0] = heap[size]
        pos[heap[0]] = 0
        pos[node] = -2
        if size > 0:
            _sift_down(heap, pos, dist, 0, size)
        if d0 > stop_value:
            state[node] = 1  # popped but beyond the stop front
            continue
        state[node] = 2
        i = node // ny
        j = node % ny
        for t in range(4):
            if t == 0:
                ii, jj = i - 1, j
            elif t == 1:
                ii, jj = i + 1, j
            elif t == 2:
                ii, jj = i, j - 1
            else:
                ii, jj = i, j + 1
            if ii < 0 or ii >= nx or jj < 0 or jj >= ny:
                continue
            nb = ii * ny + jj
            if state[nb] == 2:
                continue
            a = np.inf
            if ii > 0 and state[nb - ny] == 2:
                a = dist[nb - ny]
            if ii < nx - 1 and state[nb + ny] == 2 and dist[nb + ny] < a:
                a = dist[nb + ny]
            b = np.inf
            if jj > 0 and state[nb - 1] == 2:
                b = dist[nb - 1]
            if jj < ny - 1 and state[nb + 1] == 2 and dist[nb + 1] < b:
                b = dist[nb + 1]
            f = h * speed[ii, jj]
            if a < np.inf and b < np.inf:
                diff = a - b
                if diff < 0.0:
                    diff = -diff
                if diff >= f:
                    cand = (a if a < b else b) + f
                else:
                    cand = 0.5 * (a + b + math.sqrt(2.0 * f * f - diff * diff))
            else:
                cand = (a if a < b else b) + f
            if cand < dist[nb]:
                dist[nb] = cand
                if pos[nb] == -1 or pos[nb] == -2:
                    heap[size] = nb
                    pos[nb] = size
                    size += 1
                    _sift_up(heap, pos, dist, size - 1)
                else:
                    _sift_up(heap, pos, dist, pos[nb])

    for k in range(n):
        if state[k] != 2:
            dist[k] = np.inf
    return dist.reshape((nx, ny))


@dataclass
class DistanceField:
    """Marched distances on a lattice, with bilinear off-lattice queries."""

    x0: float
    y0: float
    h: float
    values: np.ndarray  # [i, j] -> distance at (x0 + i h, y0 + j h)
    source: tuple[float, float] | None = None
    description: str = ""

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def ny(self):
        return self.values.shape[1]

    def lattice(self):
        xs = self.x0 + self.h * np.arange(self.nx)
        ys = self.y0 + self.h * np.arange(self.ny)
        return xs, ys

    def interpolate(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        fx = (x - self.x0) / self.h
        fy = (y - self.y0) / self.h
        out = np.full(np.broadcast(fx, fy).shape, np.inf)
        inside = (fx >= 0) & (fx <= self.nx - 1) & (fy >= 0) & (fy <= self.ny - 1)
        if not np.any(inside):
            return out
        fx = np.broadcast_to(fx, out.shape)[inside]
        fy = np.broadcast_to(fy, out.shape)[inside]
        i0 = np.clip(np.floor(fx).astype(np.int64), 0, self.nx - 2)
        j0 = np.clip(np.floor(fy).astype(np.int64), 0, self.ny - 2)
        tx = fx - i0
        ty = fy - j0
        # nodes beyond a stopped front hold +inf; cap them so 0 * inf cannot
        # poison the blend (any capped value still fails every d < R test)
        v = np.minimum(self.values, 1e300)
        val = ((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i0 + 1, j0]
               + (1 - tx) * ty * v[i0, j0 + 1] + tx * ty * v[i0 + 1, j0 + 1])
        out[inside] = val
        return out

    def boundary_min(self) -> float:
        v = self.values
        return float(min(v[0, :].min(), v[-1, :].min(),
                         v[:, 0].min(), v[:, -1].min()))

    def sublevel_bbox(self, radius: float) -> Rectangle:
        mask = self.values < radius
        if not np.any(mask):
            raise OutOfDomain("empty sublevel set")
        ii, jj = np.nonzero(mask)
        x_lo = self.x0 + self.h * max(0, ii.min() - 1)
        x_hi = self.x0 + self.h * min(self.nx - 1, ii.max() + 1)
        y_lo = self.y0 + self.h * max(0, jj.min() - 1)
        y_hi = self.y0 + self.h * min(self.ny - 1, jj.max() + 1)
        return Rectangle(x_lo, x_hi, y_lo, y_hi)


def _lattice_for(domain: Rectangle, h: float):
    nx = int(round((domain.xmax - domain.xmin) / h)) + 1
    ny = int(round((domain.ymax - domain.ymin) / h)) + 1
    if nx < 2 or ny < 2:
        raise InvalidArgument("marching domain smaller than one cell")
    return nx, ny


def _speed_lattice(s, domain: Rectangle, h: float):
    nx, ny = _lattice_for(domain, h)
    xs = domain.xmin + h * np.arange(nx)
    ys = domain.ymin + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    speed = np.asarray(s.factor(X.ravel(), Y.ravel()), dtype=float).reshape(nx, ny)
    if not np.all(speed > 0.0):
        raise InvalidSurface("conformal factor must be positive on the lattice")
    return speed


def distance_field(s, source, domain, h: float, stop_value: float = np.inf,
                   init_radius: float | None = None) -> DistanceField:
    """March geodesic distance from a source over a rectangular domain.

    Seed nodes within ``init_radius`` (default 2.5 h) of the source get the
    trapezoid approximation |x - source| (lambda(source) + lambda(x)) / 2,
    which is exact on constant-factor surfaces.
    """
    if h <= 0.0:
        raise InvalidArgument("lattice spacing must be positive")
    if not isinstance(domain, Rectangle):
        domain = domain.bounding_box()
    sx, sy = float(source[0]), float(source[1])
    if not (domain.xmin <= sx <= domain.xmax and domain.ymin <= sy <= domain.ymax):
        raise InvalidArgument("source must lie inside the marching domain")
    speed = _speed_lattice(s, domain, h)
    nx, ny = speed.shape
    r0 = 2.5 * h if init_radius is None else init_radius
    i_lo = max(0, int(math.floor((sx - r0 - domain.xmin) / h)))
    i_hi = min(nx - 1, int(math.ceil((sx + r0 - domain.xmin) / h)))
    j_lo = max(0, int(math.floor((sy - r0 - domain.ymin) / h)))
    j_hi = min(ny - 1, int(math.ceil((sy + r0 - domain.ymin) / h)))
    lam_s = float(np.asarray(s.factor(sx, sy)).flat[0])
    nodes = []
    vals = []
    for i in range(i_lo, i_hi + 1):
        for j in range(j_lo, j_hi + 1):
            x = domain.xmin + i * h
            y = domain.ymin + j * h
            d = math.hypot(x - sx, y - sy)
            if d <= r0:
                nodes.append(i * ny + j)
                vals.append(d * 0.5 * (lam_s + speed[i, j]))
    if not nodes:
        raise InvalidArgument("no lattice node within the seed radius of the source")
    values = _march_kernel(speed, h, np.asarray(nodes, dtype=np.int64),
                           np.asarray(vals, dtype=float), stop_value)
    return DistanceField(domain.xmin, domain.ymin, h, values, (sx, sy),
                         description=s.description)


def geodesic_ball(d: DistanceField, radius: float) -> GeodesicBall:
    """Region {d < radius}; refuses radii whose ball leaks off the lattice."""
    if radius <= 0.0:
        raise InvalidArgument("ball radius must be positive")
    if d.boundary_min() < radius:
        raise OutOfDomain(
            f"ball of radius {radius} reaches the computed lattice boundary"
        )
    return GeodesicBall(d, radius)


@dataclass
class CoveringReport:
    """Greedy geodesic covering: centers, overlap count and the two checks."""

    centers: list
    R: float
    overlap_count: int
    disjointness_ok: bool
    coverage_ok: bool
    tolerance: float
    h: float
    min_pairwise_distance: float
    max_coverage_distance: float
    n_lattice_points: int
    center_fields: list = field(default_factory=list, repr=False)
    lattice_xy: tuple = field(default=None, repr=False)

    def to_dict(self):
        return {
            "centers": [list(c) for c in self.centers],
            "R": self.R,
            "overlap_count": self.overlap_count,
            "disjointness_ok": self.disjointness_ok,
            "coverage_ok": self.coverage_ok,
            "tolerance": self.tolerance,
            "h": self.h,
            "min_pairwise_distance": self.min_pairwise_distance,
            "max_coverage_distance": self.max_coverage_distance,
            "n_lattice_points": self.n_lattice_points,
        }


def greedy_covering(s, region, R: float, h: float) -> CoveringReport:
    """Greedy maximal R/2-separated set of lattice points of the region.

    Verifies (i) the R/2-balls of the centers cover the region lattice,
    (ii) centers are pairwise R/2-separated (so the R/4-balls are disjoint),
    and (iii) measures the maximal number N of R-balls containing any single
    lattice point.  Distances are marched on the region's bounding box grown
    by R so that near-boundary centers see true surface distances.  All
    geometric checks carry an O(h) slack of 2h, recorded in the report.
    """
    if not (0.0 < 2.0 * R <= 1.0):
        raise InvalidArgument("covering requires 0 < 2R <= 1")
    if h <= 0.0:
        raise InvalidArgument("lattice spacing must be positive")
    bbox = region.bounding_box()
    grow = R + 4.0 * h
    march_box = Rectangle(bbox.xmin - grow, bbox.xmax + grow,
                          bbox.ymin - grow, bbox.ymax + grow)
    speed = _speed_lattice(s, march_box, h)
    nx, ny = speed.shape
    xs = march_box.xmin + h * np.arange(nx)
    ys = march_box.ymin + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    member = np.asarray(region.contains(X.ravel(), Y.ravel()),
                        dtype=bool).reshape(nx, ny)
    if not np.any(member):
        raise InvalidArgument("region contains no lattice points")

    stop = R + 4.0 * h
    mindist = np.full((nx, ny), np.inf)
    centers = []
    fields = []
    half = 0.5 * R
    while True:
        cand = member & (mindist >= half)
        if not np.any(cand):
            break
        flat = int(np.argmax(cand.ravel()))  # first in (i, j) lexicographic order
        ci, cj = flat // ny, flat % ny
        cx, cy = xs[ci], ys[cj]
        vals = _march_kernel(speed, h, np.asarray([flat], dtype=np.int64),
                             np.asarray([0.0]), stop)
        centers.append((float(cx), float(cy)))
        fields.append(DistanceField(march_box.xmin, march_box.ymin, h, vals,
                                    (float(cx), float(cy))))
        np.minimum(mindist, vals, out=mindist)

    tol = 2.0 * h
    min_pair = math.inf
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            ia = (int(round((centers[b][0] - march_box.xmin) / h)),
                  int(round((centers[b][1] - march_box.ymin) / h)))
            d_ab = fields[a].values[ia]
            ib = (int(round((centers[a][0] - march_box.xmin) / h)),
                  int(round((centers[a][1] - march_box.ymin) / h)))
            d_ba = fields[b].values[ib]
            min_pair = min(min_pair, float(min(d_ab, d_ba)))
    disjoint_ok = min_pair >= half - tol
    max_cov = float(np.max(mindist[member]))
    coverage_ok = max_cov < half + tol

    counts = np.zeros((nx, ny), dtype=np.int64)
    for f in fields:
        counts += (f.values < R)
    overlap = int(np.max(counts[member])) if centers else 0

    return CoveringReport(
        centers=centers, R=R, overlap_count=overlap,
        disjointness_ok=bool(disjoint_ok), coverage_ok=bool(coverage_ok),
        tolerance=tol, h=h, min_pairwise_distance=float(min_pair),
        max_coverage_distance=max_cov, n_lattice_points=int(np.count_nonzero(member)),
        center_fields=fields, lattice_xy=(X, Y, member),
    )
