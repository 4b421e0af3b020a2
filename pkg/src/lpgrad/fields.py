"""Smooth compactly supported scalar fields on R^2 with exact jets.

Every field carries closed-form value, gradient and (Euclidean) Laplacian,
propagated symbolically through composition.  Exact jets matter downstream:
the near-singular integrals over the deformed balls need integrands that are
correct to machine precision, not to finite-difference accuracy.

The basic brick is the classical mollifier step

    s(t) = exp(-1/t)  (t > 0,  else 0),
    h(t) = s(t) / (s(t) + s(1 - t)),

which rises C-infinity-flat from 0 at t=0 to 1 at t=1.  Radial cutoffs,
linear bumps and their translates/rescalings are assembled from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgument


class Jet(NamedTuple):
    """Value, gradient components and Euclidean Laplacian at query points."""

    value: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    lap: np.ndarray


def _transition(t):
    """h, h', h'' of the exp(-1/t) step on an array with entries in (0, 1).

    With A = s(t), B = s(1-t):
        h   = A / (A + B)
        h'  = (A'B - AB') / (A + B)^2
        h'' = [(A''B - AB'')(A+B) - 2(A'B - AB')(A' + B')] / (A + B)^3
    where B' = -s'(1-t), B'' = s''(1-t), s' = s/t^2, s'' = s (1/t^4 - 2/t^3).
    """
    t = np.asarray(t, dtype=float)
    u = 1.0 - t
    # exp(-1/t) underflows harmlessly to 0 for t < ~1/745; no special casing
    # is needed because the opposite branch is then O(1).
    with np.errstate(over="ignore"):
        A = np.exp(-1.0 / t)
        B = np.exp(-1.0 / u)
    it2 = t ** -2.0
    iu2 = u ** -2.0
    dA = A * it2
    dB = -B * iu2
    ddA = A * (it2 * it2 - 2.0 * it2 / t)
    ddB = B * (iu2 * iu2 - 2.0 * iu2 / u)
    den = A + B
    h = A / den
    dh = (dA * B - A * dB) / den ** 2
    ddh = ((ddA * B - A * ddB) * den - 2.0 * (dA * B - A * dB) * (dA + dB)) / den ** 3
    return h, dh, ddh


@dataclass(frozen=True)
class CutoffProfile:
    """Radial profile equal to 1 on [0, r_in], 0 on [r_out, inf), smooth between.

    On the transition annulus the profile is h((r_out - r)/(r_out - r_in)).
    """

    r_in: float
    r_out: float

    def __post_init__(self):
        if not (0.0 < self.r_in < self.r_out):
            raise InvalidArgument(
                f"cutoff needs 0 < r_in < r_out, got ({self.r_in}, {self.r_out})"
            )

    def eval(self, r):
        """Return (f, f', f'') at radii r >= 0."""
        r = np.asarray(r, dtype=float)
        f = np.zeros_like(r)
        d1 = np.zeros_like(r)
        d2 = np.zeros_like(r)
        f[r <= self.r_in] = 1.0
        w = self.r_out - self.r_in
        # within ~1e-12 w of either edge the transition is flat to double
        # precision, and 1/t^2 would overflow against the vanishing exp term
        tiny = 1e-12
        mid = (r > self.r_in + tiny * w) & (r < self.r_out - tiny * w)
        f[(r > self.r_in) & (r <= self.r_in + tiny * w)] = 1.0
        if np.any(mid):
            t = (self.r_out - r[mid]) / w
            h, dh, ddh = _transition(t)
            f[mid] = h
            d1[mid] = -dh / w
            d2[mid] = ddh / w ** 2
        return f, d1, d2


class SmoothField:
    """Base class: a scalar field with an exact jet and a support ball."""

    support_center: tuple[float, float] = (0.0, 0.0)
    support_radius: float = 0.0

    def support_bbox(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) outside of which the field vanishes."""
        cx, cy = self.support_center
        r = self.support_radius
        return (cx - r, cx + r, cy - r, cy + r)

    def jet(self, x, y) -> Jet:
        raise NotImplementedError

    def value(self, x, y):
        return self.jet(x, y).value

    def gradient(self, x, y):
        j = self.jet(x, y)
        return j.gx, j.gy

    def laplacian(self, x, y):
        return self.jet(x, y).lap


def _as_arrays(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.broadcast_arrays(x, y)


class RadialField(SmoothField):
    """f(p) = profile(|p - center|) with the exact radial jet.

    grad = f'(r) (p - c)/r and lap = f''(r) + f'(r)/r; at r = 0 the limit
    lap -> 2 f''(0) is used (our profiles are flat there anyway).
    """

    def __init__(self, profile: CutoffProfile, center=(0.0, 0.0)):
        self.profile = profile
        self.support_center = (float(center[0]), float(center[1]))
        self.support_radius = float(profile.r_out)

    def jet(self, x, y) -> Jet:
        x, y = _as_arrays(x, y)
        dx = x - self.support_center[0]
        dy = y - self.support_center[1]
        r = np.hypot(dx, dy)
        f, d1, d2 = self.profile.eval(r)
        inv_r = np.zeros_like(r)
        pos = r > 0.0
        inv_r[pos] = 1.0 / r[pos]
        gx = d1 * dx * inv_r
        gy = d1 * dy * inv_r
        lap = np.where(pos, d2 + d1 * inv_r, 2.0 * d2)
        return Jet(f, gx, gy, lap)


class LinearBump(SmoothField):
    """((x - cx) + 1) * cutoff(|p - c|; 1/4, 1/2): affine on the inner ball.

    Inside B_{1/4}(c) the jet is exactly (value, (1, 0), 0); the support is
    compactly contained in B_{1/2}(c).
    """

    def __init__(self, center=(0.0, 0.0)):
        self.support_center = (float(center[0]), float(center[1]))
        self.support_radius = 0.5
        self._profile = CutoffProfile(0.25, 0.5)

    def jet(self, x, y) -> Jet:
        x, y = _as_arrays(x, y)
        cx, cy = self.support_center
        dx = x - cx
        dy = y - cy
        r = np.hypot(dx, dy)
        chi, d1, d2 = self._profile.eval(r)
        inv_r = np.zeros_like(r)
        pos = r > 0.0
        inv_r[pos] = 1.0 / r[pos]
        chi_x = d1 * dx * inv_r
        chi_y = d1 * dy * inv_r
        chi_lap = np.where(pos, d2 + d1 * inv_r, 2.0 * d2)
        lin = dx + 1.0
        value = lin * chi
        gx = chi + lin * chi_x
        gy = lin * chi_y
        lap = lin * chi_lap + 2.0 * chi_x
        return Jet(value, gx, gy, lap)


class CombinedField(SmoothField):
    """Pointwise linear combination with exact jet propagation."""

    def __init__(self, coefficients: Sequence[float], fields: Sequence[SmoothField]):
        if len(coefficients) != len(fields) or not fields:
            raise InvalidArgument("combine needs a nonempty coefficient/field list")
        self.coefficients = [float(c) for c in coefficients]
        self.fields = list(fields)
        # any bounding ball of the union of supports will do
        cxs = [f.support_center[0] for f in fields]
        cys = [f.support_center[1] for f in fields]
        cx = 0.5 * (min(cxs) + max(cxs))
        cy = 0.5 * (min(cys) + max(cys))
        self.support_center = (cx, cy)
        self.support_radius = max(
            np.hypot(f.support_center[0] - cx, f.support_center[1] - cy)
            + f.support_radius
            for f in fields
        )

    def support_bbox(self):
        boxes = [f.support_bbox() for f in self.fields]
        return (min(b[0] for b in boxes), max(b[1] for b in boxes),
                min(b[2] for b in boxes), max(b[3] for b in boxes))

    def jet(self, x, y) -> Jet:
        x, y = _as_arrays(x, y)
        value = np.zeros_like(x)
        gx = np.zeros_like(x)
        gy = np.zeros_like(x)
        lap = np.zeros_like(x)
        for c, f in zip(self.coefficients, self.fields):
            # fields vanish identically outside their support ball, so each
            # term only needs evaluating on the nodes inside it
            cx, cy = f.support_center
            mask = (x - cx) ** 2 + (y - cy) ** 2 <= f.support_radius ** 2
            if not np.any(mask):
                continue
            j = f.jet(x[mask], y[mask])
            value[mask] += c * j.value
            gx[mask] += c * j.gx
            gy[mask] += c * j.gy
            lap[mask] += c * j.lap
        return Jet(value, gx, gy, lap)


class RescaledField(SmoothField):
    """amplitude * f(f.center + scale * (p - center)).

    Coordinate rescaling multiplies the gradient by `scale` and the Laplacian
    by `scale**2`; the support shrinks to radius f.support_radius / scale.
    """

    def __init__(self, field: SmoothField, center, coord_scale: float, amplitude: float = 1.0):
        if coord_scale <= 0.0:
            raise InvalidArgument("coord_scale must be positive")
        self.base = field
        self.coord_scale = float(coord_scale)
        self.amplitude = float(amplitude)
        self.support_center = (float(center[0]), float(center[1]))
        self.support_radius = field.support_radius / self.coord_scale

    def jet(self, x, y) -> Jet:
        x, y = _as_arrays(x, y)
        s = self.coord_scale
        bx, by = self.base.support_center
        qx = bx + s * (x - self.support_center[0])
        qy = by + s * (y - self.support_center[1])
        j = self.base.jet(qx, qy)
        a = self.amplitude
        return Jet(a * j.value, a * s * j.gx, a * s * j.gy, a * s * s * j.lap)


def make_cutoff(r_in: float, r_out: float, center=(0.0, 0.0)) -> RadialField:
    """Radial plateau field: 1 on B_{r_in}(center), 0 outside B_{r_out}(center)."""
    return RadialField(CutoffProfile(r_in, r_out), center)


def make_linear_bump(center=(0.0, 0.0)) -> LinearBump:
    """The affine bump ((x - cx) + 1) on B_{1/4}(center), supported in B_{1/2}."""
    return LinearBump(center)


def combine(terms: Sequence[tuple[float, SmoothField]]) -> CombinedField:
    """Linear combination sum_i c_i f_i with exact jets."""
    if not terms:
        raise InvalidArgument("combine requires a nonempty term list")
    coeffs, fields = zip(*terms)
    return CombinedField(coeffs, fields)


def rescale(field: SmoothField, center, coord_scale: float, amplitude: float = 1.0) -> RescaledField:
    """Translate-and-rescale helper; see RescaledField."""
    return RescaledField(field, center, coord_scale, amplitude)


def eval_jet(field: SmoothField, point) -> tuple[float, tuple[float, float], float]:
    """Exact (value, gradient, laplacian) of a field at a single point."""
    j = field.jet(float(point[0]), float(point[1]))
    return (
        float(j.value.flat[0]),
        (float(j.gx.flat[0]), float(j.gy.flat[0])),
        float(j.lap.flat[0]),
    )
