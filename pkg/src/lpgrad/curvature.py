"""Ball-averaged integral curvature functionals and their scale behavior.

The local quantity is R^2 times the ball-averaged L^q norm of the curvature
deficit rho_K over the geodesic ball B_R(x); the global one is its supremum
over centers.  A finite center sample only ever produces a lower bound for
the supremum, and every report labels it as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, OutOfDomain
from .geodesic import distance_field, geodesic_ball
from .quadrature import GridPair, Rectangle, integrate
from .surfaces import rho_k


@dataclass
class KLocalResult:
    center: tuple[float, float]
    q: float
    R: float
    K: float
    value: float
    ball_volume: float
    error_estimate: float
    convention: str = "eigenvalue"


@dataclass
class CurvatureStats:
    """Per-center k(x, q, R, K) values and their sampled supremum."""

    q: float
    R: float
    K: float
    n: int
    convention: str
    per_center: list[KLocalResult] = field(default_factory=list)
    sup_estimate: float = 0.0
    grid_h: float = 0.0
    label: str = "sampled sup (lower bound)"

    def csv_rows(self):
        rows = []
        for r in self.per_center:
            rows.append([r.center[0], r.center[1], r.value, r.ball_volume,
                         r.error_estimate])
        return rows

    csv_header = ["center_x", "center_y", "k_local", "ball_volume", "error_estimate"]

    def to_dict(self):
        return {
            "q": self.q, "R": self.R, "K": self.K, "n": self.n,
            "convention": self.convention, "label": self.label,
            "grid_h": self.grid_h, "sup_estimate": self.sup_estimate,
            "per_center": [
                {"center": list(r.center), "value": r.value,
                 "ball_volume": r.ball_volume, "error_estimate": r.error_estimate}
                for r in self.per_center
            ],
        }


def _ball_around(s, x, R, h, domain_halfwidth=None):
    """March distances around x until the R-ball fits inside the lattice."""
    hw = domain_halfwidth if domain_halfwidth is not None else 2.0 * R + 0.5
    cx, cy = float(x[0]), float(x[1])
    for _ in range(3):
        box = Rectangle(cx - hw, cx + hw, cy - hw, cy + hw)
        d = distance_field(s, (cx, cy), box, h)
        if d.boundary_min() > R:
            return geodesic_ball(d, R)
        hw *= 2.0
    raise OutOfDomain(f"geodesic ball of radius {R} keeps reaching the lattice edge")


def k_local(s, x, q: float, R: float, K: float = 0.0, n: int = 2,
            h: float = 1.0 / 128.0, convention: str = "eigenvalue",
            workers: int = 1, ball=None, domain_halfwidth=None) -> KLocalResult:
    """R^2 times the ball-averaged L^q norm of rho_K over B_R(x).

    The ball is marched with the eikonal solver unless one is passed in; the
    error estimate is the h-vs-2h difference of the assembled value.
    """
    if q < 1.0:
        raise InvalidArgument("q must be >= 1")
    if R <= 0.0:
        raise InvalidArgument("R must be positive")
    if n < 2:
        raise InvalidArgument("dimension must be >= 2")
    if ball is None:
        ball = _ball_around(s, x, R, h, domain_halfwidth)
    centers = [c for c in s.singular_centers()]
    radii = s.feature_radii()
    bbox = ball.bounding_box()
    keep = [i for i, c in enumerate(centers)
            if bbox.xmin <= c[0] <= bbox.xmax and bbox.ymin <= c[1] <= bbox.ymax]
    pair = GridPair(ball, h, [centers[i] for i in keep],
                    feature_radii=[radii[i] for i in keep])

    def rho(xq, yq):
        return rho_k(s, xq, yq, K, n, convention)

    def assemble(grid):
        vol = integrate(grid, lambda a, b: s.factor(a, b) ** 2, ball, workers)
        if not vol > 0.0:
            raise InvalidArgument("geodesic ball has zero volume")
        val = integrate(grid, lambda a, b: rho(a, b) ** q * s.factor(a, b) ** 2,
                        ball, workers)
        return R * R * (val / vol) ** (1.0 / q), vol

    k_fine, vol = assemble(pair.fine)
    k_coarse, _ = assemble(pair.coarse)
    return KLocalResult(center=(float(x[0]), float(x[1])), q=q, R=R, K=K,
                        value=k_fine, ball_volume=vol,
                        error_estimate=abs(k_fine - k_coarse),
                        convention=convention)


def k_global(s, centers, q: float, R: float, K: float = 0.0, n: int = 2,
             h: float = 1.0 / 128.0, convention: str = "eigenvalue",
             workers: int = 1) -> CurvatureStats:
    """Max of k_local over a finite center sample (a lower bound for the sup)."""
    if not centers:
        raise InvalidArgument("center sample must be nonempty")
    stats = CurvatureStats(q=q, R=R, K=K, n=n, convention=convention, grid_h=h)
    for x in centers:
        stats.per_center.append(
            k_local(s, x, q, R, K, n, h, convention, workers))
    stats.sup_estimate = max(r.value for r in stats.per_center)
    return stats


def space_form_volume(K: float, R: float) -> float:
    """Area of the geodesic R-ball in the 2D space form of curvature K.

    K = 0: pi R^2;  K > 0: 4 pi sin^2(sqrt(K) R / 2) / K for R <= pi/sqrt(K);
    K < 0: 4 pi sinh^2(sqrt(-K) R / 2) / (-K).
    """
    if R <= 0.0:
        raise InvalidArgument("R must be positive")
    if K == 0.0:
        return math.pi * R * R
    if K > 0.0:
        if R > math.pi / math.sqrt(K) * (1.0 + 1e-12):
            raise OutOfDomain("radius exceeds the diameter of the sphere")
        return 4.0 * math.pi * math.sin(0.5 * math.sqrt(K) * R) ** 2 / K
    return 4.0 * math.pi * math.sinh(0.5 * math.sqrt(-K) * R) ** 2 / (-K)


def scale_control_report(s, x, q: float, R1: float, R2: float, K: float = 0.0,
                         h: float = 1.0 / 128.0, convention: str = "eigenvalue",
                         workers: int = 1) -> dict:
    """Evaluate both sides of the two-scale comparison of k(q, ., K).

    Checks numerically whether
        k(x,q,R1,K) <= 4 (R1/R2)^2 (v_K(R2)/v_K(R1))^(1/q) k(x,q,R2,K);
    report-only, since the comparison is only asserted under a smallness
    hypothesis that is not certified here.
    """
    if not (0.0 < R1 < R2):
        raise InvalidArgument("need 0 < R1 < R2")
    k1 = k_local(s, x, q, R1, K, 2, h, convention, workers)
    k2 = k_local(s, x, q, R2, K, 2, h, convention, workers)
    factor = 4.0 * (R1 / R2) ** 2 * (
        space_form_volume(K, R2) / space_form_volume(K, R1)) ** (1.0 / q)
    rhs = factor * k2.value
    slack = k1.error_estimate + factor * k2.error_estimate
    return {
        "center": (float(x[0]), float(x[1])),
        "q": q, "R1": R1, "R2": R2, "K": K,
        "k_R1": k1.value, "k_R2": k2.value,
        "rhs_factor": factor, "rhs": rhs,
        "holds": bool(k1.value <= rhs + slack),
        "error_estimates": (k1.error_estimate, k2.error_estimate),
    }
