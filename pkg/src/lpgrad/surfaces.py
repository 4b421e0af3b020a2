"""Conformally flat metrics g = lambda^2 dx^2 on R^2 and their pointwise operators.

A surface is described by its conformal factor lambda (with 0 < lambda <= 1)
and by the exact Euclidean Laplacian of log(lambda).  In two dimensions every
Riemannian quantity used here reduces to a pointwise rescaling:

    Delta_g u      = lambda^-2 Delta_e u
    |grad u|_g     = lambda^-1 |grad_e u|
    d(mu_g)        = lambda^2 dx
    Ric eigenvalue = Gauss curvature = -lambda^-2 Delta_e log(lambda)

No numerical differentiation happens here: factors are supplied with exact
jets exactly like the smooth fields.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument
from .fields import SmoothField, _as_arrays


class ConformalSurface:
    """Base class; subclasses supply the factor and the log-factor Laplacian."""

    description: str = "conformal surface"

    def factor(self, x, y):
        """Conformal factor lambda at the query points."""
        raise NotImplementedError

    def log_factor_laplacian(self, x, y):
        """Exact Euclidean Laplacian of log(lambda)."""
        raise NotImplementedError

    def singular_centers(self):
        """Centers where integrands may need radially graded quadrature."""
        return []

    def feature_radii(self):
        """Per-center radii where the factor profile changes regime."""
        return [[] for _ in self.singular_centers()]


class FlatSurface(ConformalSurface):
    """lambda identically 1: the Euclidean plane."""

    description = "flat plane"

    def factor(self, x, y):
        x, y = _as_arrays(x, y)
        return np.ones_like(x)

    def log_factor_laplacian(self, x, y):
        x, y = _as_arrays(x, y)
        return np.zeros_like(x)


class ConstantFactorSurface(ConformalSurface):
    """lambda identically equal to a constant in (0, 1]."""

    def __init__(self, value: float):
        if not (0.0 < value <= 1.0):
            raise InvalidArgument("constant factor must lie in (0, 1]")
        self.value = float(value)
        self.description = f"constant factor {value}"

    def factor(self, x, y):
        x, y = _as_arrays(x, y)
        return np.full_like(x, self.value)

    def log_factor_laplacian(self, x, y):
        x, y = _as_arrays(x, y)
        return np.zeros_like(x)


class ExpFactorSurface(ConformalSurface):
    """lambda = exp(phi) for a nonpositive smooth field phi.

    The log-factor Laplacian is then the exact field Laplacian of phi.
    """

    def __init__(self, phi: SmoothField, description: str = "exp-factor surface",
                 centers=(), radii=()):
        self.phi = phi
        self.description = description
        self._centers = [tuple(map(float, c)) for c in centers]
        self._radii = [list(map(float, rs)) for rs in radii]

    def factor(self, x, y):
        return np.exp(self.phi.value(x, y))

    def log_factor_laplacian(self, x, y):
        return self.phi.laplacian(x, y)

    def singular_centers(self):
        return list(self._centers)

    def feature_radii(self):
        if self._radii:
            return [list(r) for r in self._radii]
        return super().feature_radii()


class _PatchProfile:
    """Radial factor profile of one deformation patch.

    g(r) = (r^2 + eps)^beta            on [0, delta],
           1 + eta(r) ((r^2+eps)^beta - 1)   on [delta, r_out]  (blend),
           1                           on [r_out, inf),

    where eta is the smooth cutoff transition equal to 1 at delta and 0 at
    r_out.  The blend is a convex combination of values in (0, 1], so
    0 < g <= 1 as long as (r_out^2 + eps)^beta <= 1.
    """

    def __init__(self, eps: float, beta: float, delta: float, r_out: float):
        from .fields import CutoffProfile

        if eps <= 0.0:
            raise InvalidArgument("patch epsilon must be positive")
        if (r_out ** 2 + eps) ** beta > 1.0 + 1e-15:
            raise InvalidArgument("patch factor would exceed 1 on the blend annulus")
        self.eps = float(eps)
        self.beta = float(beta)
        self.delta = float(delta)
        self.r_out = float(r_out)
        self._eta = CutoffProfile(delta, r_out)

    def _core(self, r):
        """(q, q', q'') for q = (r^2 + eps)^beta."""
        b = self.beta
        base = r * r + self.eps
        q = base ** b
        dq = 2.0 * b * r * base ** (b - 1.0)
        ddq = 2.0 * b * base ** (b - 1.0) + 4.0 * b * (b - 1.0) * r * r * base ** (b - 2.0)
        return q, dq, ddq

    def eval(self, r):
        """(g, g', g'') at radii r >= 0."""
        r = np.asarray(r, dtype=float)
        g = np.ones_like(r)
        d1 = np.zeros_like(r)
        d2 = np.zeros_like(r)
        core = r <= self.delta
        if np.any(core):
            q, dq, ddq = self._core(r[core])
            g[core] = q
            d1[core] = dq
            d2[core] = ddq
        blend = (r > self.delta) & (r < self.r_out)
        if np.any(blend):
            rb = r[blend]
            q, dq, ddq = self._core(rb)
            eta, deta, ddeta = self._eta.eval(rb)
            g[blend] = 1.0 + eta * (q - 1.0)
            d1[blend] = deta * (q - 1.0) + eta * dq
            d2[blend] = ddeta * (q - 1.0) + 2.0 * deta * dq + eta * ddq
        return g, d1, d2

    def log_laplacian(self, r):
        """Delta_e log g at radii r, via (log g)'' + (log g)'/r."""
        r = np.asarray(r, dtype=float)
        g, d1, d2 = self.eval(r)
        L1 = d1 / g
        L2 = (d2 * g - d1 * d1) / (g * g)
        inv_r = np.zeros_like(r)
        pos = r > 0.0
        inv_r[pos] = 1.0 / r[pos]
        return np.where(pos, L2 + L1 * inv_r, 2.0 * L2)


class PatchedSurface(ConformalSurface):
    """Factor 1 outside a family of disjoint deformation balls.

    Each patch (center, eps) carries the radial profile above; centers must
    be separated by at least twice the patch radius so the patches never
    overlap.
    """

    def __init__(self, centers, epsilons, beta: float, delta: float,
                 r_out: float = 0.125, description: str = "patched surface"):
        if len(centers) != len(epsilons):
            raise InvalidArgument("centers and epsilons must have equal length")
        if not (0.0 < delta < r_out):
            raise InvalidArgument("need 0 < delta < patch radius")
        self.centers = [tuple(map(float, c)) for c in centers]
        self.beta = float(beta)
        self.delta = float(delta)
        self.r_out = float(r_out)
        self.profiles = [_PatchProfile(e, beta, delta, r_out) for e in epsilons]
        self.description = description
        for i in range(len(self.centers)):
            for j in range(i + 1, len(self.centers)):
                d = np.hypot(self.centers[i][0] - self.centers[j][0],
                             self.centers[i][1] - self.centers[j][1])
                if d < 2.0 * r_out:
                    raise InvalidArgument("deformation balls overlap")

    def _per_patch(self, x, y, fn, fill):
        x, y = _as_arrays(x, y)
        out = np.full_like(x, fill)
        for (cx, cy), prof in zip(self.centers, self.profiles):
            d2 = (x - cx) ** 2 + (y - cy) ** 2
            mask = d2 < self.r_out ** 2
            if np.any(mask):
                out[mask] = fn(prof, np.sqrt(d2[mask]))
        return out

    def factor(self, x, y):
        return self._per_patch(x, y, lambda p, r: p.eval(r)[0], 1.0)

    def log_factor_laplacian(self, x, y):
        return self._per_patch(x, y, lambda p, r: p.log_laplacian(r), 0.0)

    def singular_centers(self):
        return list(self.centers)

    def feature_radii(self):
        out = []
        for prof in self.profiles:
            out.append([np.sqrt(prof.eps), self.delta, self.r_out])
        return out


def laplace_beltrami(s: ConformalSurface, u: SmoothField, x, y):
    """Delta_g u = lambda^-2 Delta_e u."""
    lam = s.factor(x, y)
    return u.laplacian(x, y) / lam ** 2


def riem_grad_norm(s: ConformalSurface, u: SmoothField, x, y):
    """|grad u|_g = lambda^-1 |grad_e u|."""
    gx, gy = u.gradient(x, y)
    return np.hypot(gx, gy) / s.factor(x, y)


def volume_density(s: ConformalSurface, x, y):
    """Density of d(mu_g) against Lebesgue measure: lambda^2."""
    return s.factor(x, y) ** 2


def min_ricci(s: ConformalSurface, x, y, convention: str = "eigenvalue"):
    """Smallest eigenvalue of the Ricci endomorphism.

    "eigenvalue" is the geometric 2D formula -lambda^-2 Delta_e log(lambda)
    (Ric = K g with K the Gauss curvature).  "double_flat" is the variant
    -2 Delta_e log(lambda) without the conformal factor, kept as a toggle so
    reports can be reproduced in either bookkeeping.
    """
    lap = s.log_factor_laplacian(x, y)
    if convention == "eigenvalue":
        return -lap / s.factor(x, y) ** 2
    if convention == "double_flat":
        return -2.0 * lap
    raise InvalidArgument(f"unknown curvature convention {convention!r}")


def rho_k(s: ConformalSurface, x, y, K: float, n: int = 2,
          convention: str = "eigenvalue"):
    """Curvature deficit (min Ric - (n-1) K)_- with a_- = (|a| - a)/2."""
    if n < 2:
        raise InvalidArgument("dimension must be >= 2")
    a = min_ricci(s, x, y, convention) - (n - 1) * K
    return 0.5 * (np.abs(a) - a)
