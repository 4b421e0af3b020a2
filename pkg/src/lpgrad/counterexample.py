"""The deformed-plane surface on which the L^p gradient estimate fails.

Construction, for p > 2 and beta with beta (p - 2) > 1:

* bumps phi_m = ((x - m) + 1) * cutoff on unit-separated centers x_m, summed
  into u_k = sum_{m<=k} c phi_m / 2^m with a fixed global scale c;
* a conformal factor equal to (|x - x_m|^2 + eps_m)^beta on B_delta(x_m),
  blended smoothly to 1 on the annulus up to radius 1/8, and 1 elsewhere;
* eps_m chosen so the m-th patch alone contributes at least 1 to the p-th
  power of the gradient norm of u_k, while the value and Laplacian norms
  stay summable with bounds independent of k.

The gradient integral over the deformed core has the closed form

    integral over B_delta of (r^2 + eps)^((2-p) beta) dx
        = pi [ (delta^2 + eps)^(gamma+1) - eps^(gamma+1) ] / (gamma + 1),

gamma = (2 - p) beta < -1, which both drives the epsilon selection and serves
as the independent cross-check for the quadrature route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconclusiveResolution, InvalidArgument, ScheduleOverflow
from .fields import CombinedField, combine, make_cutoff, make_linear_bump, rescale
from .quadrature import EuclideanBall, GridPair, Rectangle, build_grid, integrate, lp_norm
from .surfaces import (ConformalSurface, ExpFactorSurface, FlatSurface,
                       PatchedSurface, min_ricci)

PATCH_RADIUS = 0.125  # deformation balls B_{1/8}(x_m)


def radial_profile_integral(delta: float, eps: float, gamma: float) -> float:
    """Closed form of the integral of (r^2 + eps)^gamma over B_delta (gamma != -1)."""
    g1 = gamma + 1.0
    return math.pi * ((delta * delta + eps) ** g1 - eps ** g1) / g1


@dataclass
class CounterexampleSpec:
    """Parameters of the construction; invariants checked on creation."""

    p: float = 4.0
    beta: float = 1.0
    delta: float = 0.1
    k_max: int = 8
    centers: list = None
    scale_c: float | None = None
    scale_h: float = 1.0 / 256.0  # resolution used once to compute the scale c

    def __post_init__(self):
        if self.p <= 2.0:
            raise InvalidArgument("construction needs p > 2")
        if self.beta * (self.p - 2.0) <= 1.0:
            raise InvalidArgument("need beta (p - 2) > 1 for the core divergence")
        if not (0.0 < self.delta < PATCH_RADIUS):
            raise InvalidArgument("need 0 < delta < 1/8")
        if self.k_max < 0:
            raise InvalidArgument("k_max must be nonnegative")
        if self.centers is None:
            self.centers = [(float(m), 0.0) for m in range(self.k_max + 1)]
        else:
            self.centers = [(float(c[0]), float(c[1])) for c in self.centers]
        if len(self.centers) != self.k_max + 1:
            raise InvalidArgument("need one center per index 0..k_max")
        for i in range(len(self.centers)):
            for j in range(i + 1, len(self.centers)):
                d = math.hypot(self.centers[i][0] - self.centers[j][0],
                               self.centers[i][1] - self.centers[j][1])
                if d < 1.0 - 1e-12:
                    raise InvalidArgument("centers must be pairwise >= 1 apart")

    @property
    def gamma(self) -> float:
        return (2.0 - self.p) * self.beta

    @property
    def tail_sum(self) -> float:
        """sum over m >= 0 of 2^(-m p)."""
        return 1.0 / (1.0 - 2.0 ** (-self.p))


def select_epsilon(p: float, beta: float, delta: float, threshold: float,
                   c: float, eps_max: float | None = None,
                   eps_floor: float = 1e-300) -> float:
    """Largest epsilon on a dyadic lattice with c^p I(eps) >= threshold.

    I(eps) is the closed-form core gradient integral; it is strictly
    decreasing in eps, so a bisection over the lattice indices suffices.
    """
    if beta * (p - 2.0) <= 1.0:
        raise InvalidArgument("need beta (p - 2) > 1")
    if threshold <= 0.0:
        raise InvalidArgument("threshold must be positive")
    gamma = (2.0 - p) * beta
    if eps_max is None:
        eps_max = delta * delta
    cp = c ** p

    def ok(j: int) -> bool:
        return cp * radial_profile_integral(delta, eps_max * 2.0 ** (-j), gamma) >= threshold

    j_hi = int(math.floor(math.log2(eps_max / eps_floor)))
    if ok(0):
        return eps_max
    if not ok(j_hi):
        raise ScheduleOverflow(
            f"threshold {threshold} unreachable above eps floor {eps_floor}")
    lo, hi = 0, j_hi  # ok(lo) is False, ok(hi) is True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return eps_max * 2.0 ** (-hi)


@dataclass
class EpsilonSchedule:
    """Per-patch deformation depths and the thresholds they attain."""

    epsilons: list
    thresholds: list  # required lower bounds for I(eps_m), i.e. 2^{mp}/c^p
    attained: list    # closed-form I(eps_m)

    def __post_init__(self):
        for e, t, a in zip(self.epsilons, self.thresholds, self.attained):
            if e <= 0.0:
                raise InvalidArgument("epsilons must be positive")
            if a < t:
                raise InvalidArgument("schedule fails its own threshold")
        for e0, e1 in zip(self.epsilons, self.epsilons[1:]):
            if not e1 < e0:
                raise InvalidArgument("epsilons must decrease strictly")


def _flat_bump_norms(p: float, h: float, workers: int = 1):
    """Flat L^p(R^2)^p norms of the base bump and of its Euclidean Laplacian."""
    phi0 = make_linear_bump((0.0, 0.0))
    grid = build_grid(Rectangle(-0.5, 0.5, -0.5, 0.5), h)
    flat = FlatSurface()
    a = lp_norm(flat, "value", phi0, None, p, grid, workers) ** p
    b = lp_norm(flat, "laplacian", phi0, None, p, grid, workers) ** p
    return a, b


@dataclass
class SigmaBundle:
    """The assembled counterexample: surface, bumps, test functions, schedule."""

    spec: CounterexampleSpec
    surface: ConformalSurface
    bumps: list
    u_fields: list  # u_fields[k] = sum_{m<=k} c phi_m / 2^m
    schedule: EpsilonSchedule
    scale_c: float
    flat_value_norm_p: float
    flat_lap_norm_p: float


def build_sigma(spec: CounterexampleSpec, workers: int = 1) -> SigmaBundle:
    """Construct the surface, the epsilon schedule and the functions u_k."""
    p = spec.p
    if spec.scale_c is None:
        a, b = _flat_bump_norms(p, spec.scale_h, workers)
        c = 0.5 * (a + b) ** (-1.0 / p) * spec.tail_sum ** (-1.0 / p)
    else:
        a, b = _flat_bump_norms(p, spec.scale_h, workers)
        c = float(spec.scale_c)
    gamma = spec.gamma
    epsilons, thresholds, attained = [], [], []
    for m in range(spec.k_max + 1):
        t = 2.0 ** (m * p) / c ** p
        eps = select_epsilon(p, spec.beta, spec.delta, 2.0 ** (m * p), c)
        while epsilons and not eps < epsilons[-1]:
            eps *= 0.5
        epsilons.append(eps)
        thresholds.append(t)
        attained.append(radial_profile_integral(spec.delta, eps, gamma))
    schedule = EpsilonSchedule(epsilons, thresholds, attained)
    surface = PatchedSurface(spec.centers, epsilons, spec.beta, spec.delta,
                             PATCH_RADIUS,
                             description=f"deformed plane (p={p}, beta={spec.beta})")
    bumps = [make_linear_bump(cm) for cm in spec.centers]
    u_fields = []
    for k in range(spec.k_max + 1):
        terms = [(c * 2.0 ** (-m), bumps[m]) for m in range(k + 1)]
        u_fields.append(combine(terms))
    return SigmaBundle(spec=spec, surface=surface, bumps=bumps,
                       u_fields=u_fields, schedule=schedule, scale_c=c,
                       flat_value_norm_p=a, flat_lap_norm_p=b)


@dataclass
class FailureReport:
    """Norm triples per k with pass/fail booleans and quadrature error bars."""

    p: float
    k_max: int
    scale_c: float
    per_k: list = field(default_factory=list)
    per_patch: list = field(default_factory=list)
    grid_h: float = 0.0
    torus_volume: float = 1.0
    product_dim: int = 2
    rescale_power: float = 1.0  # sigma = (c'/c)^p applied by product bookkeeping

    @property
    def all_ok(self) -> bool:
        return all(r["small_ok"] and r["grad_ok"] for r in self.per_k)

    csv_header = ["k", "norm_u_p", "norm_lap_p", "norm_grad_p",
                  "small_ok", "grad_ok", "err_u", "err_lap", "err_grad"]

    def csv_rows(self):
        return [[r["k"], r["norm_u_p"], r["norm_lap_p"], r["norm_grad_p"],
                 int(r["small_ok"]), int(r["grad_ok"]),
                 r["err_u"], r["err_lap"], r["err_grad"]] for r in self.per_k]

    def to_dict(self):
        return {
            "p": self.p, "k_max": self.k_max, "scale_c": self.scale_c,
            "grid_h": self.grid_h, "torus_volume": self.torus_volume,
            "product_dim": self.product_dim, "rescale_power": self.rescale_power,
            "all_ok": self.all_ok, "per_k": self.per_k,
            "per_patch": self.per_patch,
        }


def _patch_rect(center) -> Rectangle:
    cx, cy = center
    return Rectangle(cx - 0.5, cx + 0.5, cy - 0.5, cy + 0.5)


def verify_failure(bundle: SigmaBundle, h: float = 1.0 / 512.0,
                   workers: int = 1, surface: ConformalSurface | None = None,
                   strict: bool = True) -> FailureReport:
    """Compute the three norms of every u_k and check the failure pattern.

    Supports of distinct bumps are disjoint, so each patch is integrated once
    on its own carved grid and the per-k norms are assembled additively.  A
    polar ladder graded below sqrt(eps_m) resolves the deformed core; the
    core gradient integral is cross-checked against its closed form.  Error
    bars are h-vs-2h differences; if a bar crosses a pass/fail threshold the
    computation refuses to decide (InconclusiveResolution) unless
    ``strict=False``.
    """
    spec = bundle.spec
    p = spec.p
    surf = bundle.surface if surface is None else surface
    c = bundle.scale_c
    gamma = spec.gamma
    report = FailureReport(p=p, k_max=spec.k_max, scale_c=c, grid_h=h)

    patch = []
    for m, center in enumerate(spec.centers):
        eps = bundle.schedule.epsilons[m]
        feats = [math.sqrt(eps), spec.delta, PATCH_RADIUS]
        r_min = min(1e-8, math.sqrt(eps) / 8.0)
        scaled = combine([(c * 2.0 ** (-m), bundle.bumps[m])])
        pair = GridPair(_patch_rect(center), h, [center],
                        feature_radii=[feats], r_min=r_min)
        val, e_val = pair.lp_norm_p(surf, "value", scaled, None, p, workers)
        grad, e_grad = pair.lp_norm_p(surf, "grad", scaled, None, p, workers)
        lap, e_lap = pair.lp_norm_p(surf, "laplacian", scaled, None, p, workers)
        # the Laplacian integrand must vanish identically on B_{1/4}(x_m)
        lap_core = lp_norm(surf, "laplacian", scaled,
                           EuclideanBall(center, 0.25), p, pair.fine, workers) ** p

        ball = EuclideanBall(center, spec.delta)
        core_grid = build_grid(ball, h, [center], feature_radii=[feats],
                               r_min=r_min)
        core_quad = lp_norm(surf, "grad", bundle.bumps[m], ball, p,
                            core_grid, workers) ** p
        core_closed = radial_profile_integral(spec.delta, eps, gamma)
        patch.append({
            "m": m, "center": list(center), "eps": eps,
            "threshold": bundle.schedule.thresholds[m],
            "core_closed": core_closed, "core_quad": core_quad,
            "core_relerr": abs(core_quad - core_closed) / core_closed,
            "value_p": val, "grad_p": grad, "lap_p": lap,
            "err_value": e_val, "err_grad": e_grad, "err_lap": e_lap,
            "lap_core_p": lap_core,
        })
    report.per_patch = patch

    for k in range(spec.k_max + 1):
        nu = math.fsum(patch[m]["value_p"] for m in range(k + 1))
        ng = math.fsum(patch[m]["grad_p"] for m in range(k + 1))
        nl = math.fsum(patch[m]["lap_p"] for m in range(k + 1))
        eu = math.fsum(patch[m]["err_value"] for m in range(k + 1))
        eg = math.fsum(patch[m]["err_grad"] for m in range(k + 1))
        el = math.fsum(patch[m]["err_lap"] for m in range(k + 1))
        small = nu + nl
        small_err = eu + el
        if strict and small - small_err < 1.0 <= small + small_err:
            raise InconclusiveResolution(
                f"k={k}: value+laplacian bar [{small - small_err}, "
                f"{small + small_err}] crosses 1; refine h")
        if strict and ng - eg < k <= ng + eg:
            raise InconclusiveResolution(
                f"k={k}: gradient bar [{ng - eg}, {ng + eg}] crosses {k}; refine h")
        report.per_k.append({
            "k": k, "norm_u_p": nu, "norm_lap_p": nl, "norm_grad_p": ng,
            "err_u": eu, "err_lap": el, "err_grad": eg,
            "small_ok": bool(small + small_err < 1.0),
            "grad_ok": bool(ng - eg >= k),
        })
    return report


def u_infty_tail(bundle: SigmaBundle, k: int) -> float:
    """Upper bound for the H^{2,p}-norm^p of u_infty - u_k.

    Each missing term contributes at most c^p 2^{-mp} (||phi0||_p^p +
    ||Delta_e phi0||_p^p) because the factor is at most 1 where the bump
    lives and exactly 1 where its Laplacian is nonzero; summing the geometric
    tail gives the bound.  It certifies u_k -> u_infty in H^{2,p}.
    """
    if k < 0:
        raise InvalidArgument("k must be nonnegative")
    spec = bundle.spec
    p = spec.p
    per_term = bundle.scale_c ** p * (bundle.flat_value_norm_p + bundle.flat_lap_norm_p)
    return per_term * 2.0 ** (-(k + 1) * p) / (1.0 - 2.0 ** (-p))


def product_norms(report: FailureReport, torus_volume: float, n: int = 3) -> FailureReport:
    """Norms of v_k(x, y) = u_k(x) on the product with a closed (n-2)-manifold.

    v_k is constant in the fiber directions, so every norm^p is multiplied by
    the fiber volume V.  If V pushes the value+Laplacian sum past 1 the whole
    sequence is rescaled (every norm^p is p-homogeneous in the scale), and the
    booleans are recomputed from the rescaled numbers.
    """
    if torus_volume <= 0.0:
        raise InvalidArgument("fiber volume must be positive")
    if n < 2:
        raise InvalidArgument("product dimension must be >= 2")
    V = float(torus_volume)
    worst = max((r["norm_u_p"] + r["norm_lap_p"] + r["err_u"] + r["err_lap"])
                for r in report.per_k)
    sigma = 1.0 if V * worst < 1.0 else 0.5 / (V * worst)
    out = FailureReport(p=report.p, k_max=report.k_max,
                        scale_c=report.scale_c * sigma ** (1.0 / report.p),
                        grid_h=report.grid_h, torus_volume=V, product_dim=n,
                        rescale_power=sigma)
    f = sigma * V
    for r in report.per_k:
        nu, nl, ng = f * r["norm_u_p"], f * r["norm_lap_p"], f * r["norm_grad_p"]
        eu, el, eg = f * r["err_u"], f * r["err_lap"], f * r["err_grad"]
        out.per_k.append({
            "k": r["k"], "norm_u_p": nu, "norm_lap_p": nl, "norm_grad_p": ng,
            "err_u": eu, "err_lap": el, "err_grad": eg,
            "small_ok": bool(nu + nl + eu + el < 1.0),
            "grad_ok": bool(ng - eg >= r["k"]),
        })
    out.per_patch = report.per_patch
    return out


@dataclass
class OptimalityReport:
    """Centers pushed out far enough that Ric >= -alpha(distance) holds."""

    centers: list
    curvature_bounds: list  # inf of min Ric over each patch
    margins: list
    max_violation: float
    ok: bool

    def to_dict(self):
        return {
            "centers": [list(c) for c in self.centers],
            "curvature_bounds": self.curvature_bounds,
            "margins": self.margins,
            "max_violation": self.max_violation,
            "ok": self.ok,
        }


def _patch_curvature_bound(surface: PatchedSurface, m: int) -> float:
    """Inf of min Ric over the m-th patch: the closed-form center value
    -4 beta eps^-(2 beta + 1) capped with a dense radial sample of the blend."""
    prof = surface.profiles[m]
    eps, beta = prof.eps, surface.beta
    center_val = -4.0 * beta * eps ** (-(2.0 * beta + 1.0))
    rs = np.concatenate([
        np.geomspace(max(eps, 1e-280) ** 0.5 * 1e-2, surface.r_out, 2000),
        np.linspace(surface.delta, surface.r_out, 500),
    ])
    lam, _, _ = prof.eval(rs)
    curv = -prof.log_laplacian(rs) / lam ** 2
    return min(center_val, float(curv.min()))


def optimality_schedule(alpha, bundle: SigmaBundle,
                        curvature_bounds=None) -> OptimalityReport:
    """Choose centers (s_m, 0) so that Ric(x) >= -alpha(r(x)) everywhere.

    s_m is pushed out until alpha(s_m - 1/8 - margin_m) >= |inf Ric| of patch
    m.  The margin 1/2 + (m+1)/4 accounts for geodesic shortcuts through the
    earlier patches: projecting any path to the x-axis shows r(x) >=
    x_1 - (m+1)/4 on patch m, since the factor is 1 outside the patches and
    each patch occupies an x-interval of length 1/4.  The verification then
    checks min Ric >= -alpha(r_lb) on per-patch sample lattices against that
    rigorous lower bound r_lb, which is only stronger than the geodesic
    statement.
    """
    spec = bundle.spec
    if curvature_bounds is None:
        curvature_bounds = [
            _patch_curvature_bound(bundle.surface, m)
            for m in range(spec.k_max + 1)
        ]
    centers = []
    margins = []
    prev = 0.0
    for m, cb in enumerate(curvature_bounds):
        need = max(0.0, -cb)
        margin = 0.5 + 0.25 * (m + 1)
        margins.append(margin)
        t = max(prev + 1.0, 1.0)
        if need > 0.0:
            while alpha(max(0.0, t - PATCH_RADIUS - margin)) < need:
                t = 2.0 * t + 1.0
            lo = max(prev + 1.0, 1.0)
            hi = t
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if alpha(max(0.0, mid - PATCH_RADIUS - margin)) >= need:
                    hi = mid
                else:
                    lo = mid
            t = hi
        centers.append((t, 0.0))
        prev = t

    # sampled verification against the projection lower bound for r(x)
    max_violation = 0.0
    if isinstance(bundle.surface, PatchedSurface):
        check_surface = PatchedSurface(
            centers, bundle.schedule.epsilons, spec.beta, spec.delta,
            PATCH_RADIUS, description="optimality-scheduled surface")
        for m, (sx, sy) in enumerate(centers):
            eps = bundle.schedule.epsilons[m]
            rs = np.concatenate([
                [0.0], np.geomspace(max(eps, 1e-280) ** 0.5 * 1e-2, PATCH_RADIUS, 400)])
            for ang in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False):
                xs = sx + rs * math.cos(ang)
                ys = sy + rs * math.sin(ang)
                ric = min_ricci(check_surface, xs, ys)
                r_lb = np.maximum(0.0, xs - 0.25 * (m + 1))
                bound = -np.array([alpha(t) for t in r_lb])
                max_violation = max(max_violation, float(np.max(bound - ric)))
    return OptimalityReport(centers=centers, curvature_bounds=list(curvature_bounds),
                            margins=margins, max_violation=max_violation,
                            ok=bool(max_violation <= 0.0))


@dataclass
class IntegralBoundReport:
    """Unbounded pointwise curvature coexisting with uniform integral bounds."""

    p: float
    a: float
    n_max: int
    sup_positive_laplacian: list  # per n = 1..n_max
    fitted_exponent: float
    per_w: list = field(default_factory=list)
    flat_bound: float = 0.0  # 2^p int ((Delta_e phi0)_+)^p dx
    grid_h: float = 0.0

    def to_dict(self):
        return {
            "p": self.p, "a": self.a, "n_max": self.n_max,
            "sup_positive_laplacian": self.sup_positive_laplacian,
            "fitted_exponent": self.fitted_exponent,
            "flat_bound": self.flat_bound, "grid_h": self.grid_h,
            "per_w": self.per_w,
        }

    csv_header = ["w_x", "w_y", "ball_volume", "curvature_integral_eigenvalue",
                  "curvature_integral_double_flat", "volume_error"]

    def csv_rows(self):
        return [[r["w"][0], r["w"][1], r["ball_volume"],
                 r["curvature_integral_eigenvalue"],
                 r["curvature_integral_double_flat"], r["volume_error"]]
                for r in self.per_w]


REMARK_AMPLITUDE = 0.3
# any nonpositive C_c^infty profile works; a moderate amplitude keeps the
# exp(2 phi) weight close enough to 1 that the weighted deficit integral is
# maximal at the first patch in both curvature conventions


def remark_surface(a: float, n_max: int, p: float) -> ExpFactorSurface:
    """Factor exp(sum of shrinking nonpositive bumps at (4n, 0)), n = 1..n_max."""
    if not (2.0 - 2.0 / p < a < 2.0):
        raise InvalidArgument("need a in (2 - 2/p, 2)")
    base = make_cutoff(0.25, 0.5)
    bumps = [rescale(base, (4.0 * n, 0.0), float(n),
                     -REMARK_AMPLITUDE * float(n) ** (-a))
             for n in range(1, n_max + 1)]
    phi = combine([(1.0, b) for b in bumps])
    centers = [(4.0 * n, 0.0) for n in range(1, n_max + 1)]
    radii = [[0.25 / n, 0.5 / n] for n in range(1, n_max + 1)]
    return ExpFactorSurface(phi, description=f"integral-bound example (a={a})",
                            centers=centers, radii=radii)


def integral_bound_example(p: float, a: float, n_max: int = 10,
                           h: float = 1.0 / 256.0, w_sample=None,
                           workers: int = 1) -> IntegralBoundReport:
    """Probe the example with unbounded curvature but small integral deficit.

    Reports (1) the growth of the positive part of the flat Laplacian across
    patches with its fitted exponent, (2) the curvature-deficit integral over
    unit geodesic balls around sampled basepoints, in both curvature
    conventions, and (3) the geodesic ball volumes.
    """
    surface = remark_surface(a, n_max, p)
    base = make_cutoff(0.25, 0.5)
    sups = []
    for n in range(1, n_max + 1):
        r_loc = np.linspace(0.0, 0.5, 4001)
        xs = 4.0 * n + r_loc / n
        ys = np.zeros_like(xs)
        lap = surface.phi.laplacian(xs, ys)
        sups.append(float(np.max(np.maximum(lap, 0.0))))
    ns = np.arange(1, n_max + 1, dtype=float)
    slope = float(np.polyfit(np.log(ns), np.log(sups), 1)[0])

    half_ball = EuclideanBall((0.0, 0.0), 0.5)
    fgrid = build_grid(half_ball, min(h, 1.0 / 256.0))
    flat_bound = 2.0 ** p * integrate(
        fgrid,
        lambda x, y: np.maximum(-REMARK_AMPLITUDE * base.laplacian(x, y), 0.0) ** p,
        half_ball, workers)

    if w_sample is None:
        w_sample = [(4.0, 0.0), (8.0, 0.0), (12.0, 0.0), (2.0, 0.0),
                    (6.0, 0.0), (4.0, 0.75)]
    report = IntegralBoundReport(p=p, a=a, n_max=n_max,
                                 sup_positive_laplacian=sups,
                                 fitted_exponent=slope, flat_bound=flat_bound,
                                 grid_h=h)
    from .geodesic import distance_field, geodesic_ball

    for w in w_sample:
        box = Rectangle(w[0] - 2.2, w[0] + 2.2, w[1] - 2.2, w[1] + 2.2)
        d = distance_field(surface, w, box, h)
        ball = geodesic_ball(d, 1.0)
        bbox = ball.bounding_box()
        keep = [i for i, cc in enumerate(surface.singular_centers())
                if bbox.xmin <= cc[0] <= bbox.xmax and bbox.ymin <= cc[1] <= bbox.ymax]
        pair = GridPair(ball, h, [surface.singular_centers()[i] for i in keep],
                        feature_radii=[surface.feature_radii()[i] for i in keep])

        def deficit(conv):
            def f(x, y):
                ric = min_ricci(surface, x, y, conv)
                neg = np.maximum(-ric, 0.0)
                return neg ** p * surface.factor(x, y) ** 2
            return f

        vol, vol_err = pair.integrate(lambda x, y: surface.factor(x, y) ** 2, ball,
                                      workers)
        int_a, err_a = pair.integrate(deficit("eigenvalue"), ball, workers)
        int_b, err_b = pair.integrate(deficit("double_flat"), ball, workers)
        report.per_w.append({
            "w": [float(w[0]), float(w[1])],
            "ball_volume": vol, "volume_error": vol_err,
            "curvature_integral_eigenvalue": int_a,
            "curvature_integral_eigenvalue_error": err_a,
            "curvature_integral_double_flat": int_b,
            "curvature_integral_double_flat_error": err_b,
        })
    return report
