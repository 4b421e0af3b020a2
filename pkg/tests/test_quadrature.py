import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpgrad.errors import EvaluationError, InvalidArgument
from lpgrad.fields import combine, make_cutoff, make_linear_bump
from lpgrad.quadrature import (EuclideanBall, Rectangle, avg_lp_norm,
                               build_grid, integrate, lp_norm)


def radial_oracle(delta, eps, gamma):
    """Antiderivative of 2 pi r (r^2 + eps)^gamma over [0, delta]."""
    return math.pi * ((delta ** 2 + eps) ** (gamma + 1) - eps ** (gamma + 1)) / (gamma + 1)


class TestBuildGrid:
    def test_unit_square_tile_count(self):
        g = build_grid(Rectangle(0, 1, 0, 1), 0.1)
        assert g.n_tiles == 100
        assert np.all(g.ws > 0)
        assert abs(g.total_weight() - 1.0) <= 1e-12

    def test_partition_with_center(self):
        g = build_grid(Rectangle(0, 1, 0, 1), 0.1, centers=[(0.5, 0.5)])
        assert g.n_polar_tiles > 0
        assert abs(g.total_weight() - 1.0) <= 1e-10

    def test_grading_reaches_r_min(self):
        ball = EuclideanBall((0.0, 0.0), 0.1)
        g = build_grid(ball, 0.01, centers=[(0.0, 0.0)])
        r = np.hypot(g.xs, g.ys)
        assert r.min() <= 1e-8

    def test_invalid_h(self):
        with pytest.raises(InvalidArgument):
            build_grid(Rectangle(0, 1, 0, 1), 0.0)
        with pytest.raises(InvalidArgument):
            build_grid(Rectangle(0, 1, 0, 1), -0.5)

    def test_ball_area_exact(self):
        ball = EuclideanBall((0.3, -0.2), 0.17)
        g = build_grid(ball, 0.01)
        assert abs(g.total_weight() - math.pi * 0.17 ** 2) <= 1e-12 * ball.area


class TestIntegrate:
    def test_ball_area(self):
        ball = EuclideanBall((0.0, 0.0), 0.1)
        g = build_grid(ball, 0.01, centers=[(0.0, 0.0)])
        val = integrate(g, lambda x, y: np.ones_like(x))
        assert abs(val - math.pi * 0.01) <= 1e-10 * math.pi * 0.01

    def test_singular_radial_value(self):
        # frozen from the antiderivative: pi (1/eps - 1/(delta^2+eps))
        ball = EuclideanBall((0.0, 0.0), 0.1)
        g = build_grid(ball, 0.01, centers=[(0.0, 0.0)])
        val = integrate(g, lambda x, y: (x * x + y * y + 1e-3) ** -2.0)
        assert val == pytest.approx(2855.9933214452667, rel=1e-8)

    def test_odd_integrand(self):
        ball = EuclideanBall((0.0, 0.0), 0.25)
        g = build_grid(ball, 0.01)
        assert abs(integrate(g, lambda x, y: x)) <= 1e-12

    def test_nonfinite_names_node(self):
        g = build_grid(Rectangle(0, 1, 0, 1), 0.25)

        def bad(x, y):
            out = np.ones_like(x)
            out[(x > 0.5) & (y > 0.5)] = np.nan
            return out

        with pytest.raises(EvaluationError, match="x="):
            integrate(g, bad)

    def test_worker_counts_agree_exactly(self):
        g = build_grid(Rectangle(0, 2, 0, 1), 1 / 64, centers=[(0.7, 0.4)])
        f = lambda x, y: np.exp(-3 * x) * np.cos(5 * y) + (x - 0.7) ** 2
        assert integrate(g, f, workers=1) == integrate(g, f, workers=8)


class TestClosedFormOracle:
    def test_sweep(self):
        # twenty (eps, gamma) pairs spanning eps in [1e-12, 1e-1]
        ball = EuclideanBall((0.0, 0.0), 0.1)
        g = build_grid(ball, 0.005, centers=[(0.0, 0.0)], r_min=1e-9)
        epss = np.geomspace(1e-12, 1e-1, 5)
        gammas = [-1.2, -2.0, -3.0, -4.5]
        for eps in epss:
            for gamma in gammas:
                want = radial_oracle(0.1, float(eps), gamma)
                got = integrate(g, lambda x, y: (x * x + y * y + eps) ** gamma)
                assert abs(got - want) <= 1e-8 * abs(want), (eps, gamma)


class TestLpNorms:
    def test_flat_gradient_norm(self, flat):
        phi = make_linear_bump((0.0, 0.0))
        ball = EuclideanBall((0.0, 0.0), 0.25)
        g = build_grid(ball, 0.005)
        got = lp_norm(flat, "grad", phi, ball, 2.0, g)
        assert got == pytest.approx(math.sqrt(math.pi / 16.0), rel=1e-10)

    def test_zero_field(self, flat):
        phi = make_linear_bump((0.0, 0.0))
        zero = combine([(1.0, phi), (-1.0, phi)])
        g = build_grid(Rectangle(-1, 1, -1, 1), 0.05)
        for quantity in ("value", "grad", "laplacian"):
            assert lp_norm(flat, quantity, zero, None, 4.0, g) == 0.0

    def test_invalid_p(self, flat):
        phi = make_linear_bump((0.0, 0.0))
        g = build_grid(Rectangle(-1, 1, -1, 1), 0.25)
        with pytest.raises(InvalidArgument):
            lp_norm(flat, "value", phi, None, 0.5, g)
        with pytest.raises(InvalidArgument):
            lp_norm(flat, "vorticity", phi, None, 2.0, g)

    def test_deformed_core_matches_closed_form(self, small_bundle):
        # gradient of the bump is exactly 1 on the core, so its p-energy is
        # the radial profile integral
        spec = small_bundle.spec
        m = 1
        eps = small_bundle.schedule.epsilons[m]
        center = spec.centers[m]
        ball = EuclideanBall(center, spec.delta)
        g = build_grid(ball, 1 / 128, centers=[center],
                       feature_radii=[[math.sqrt(eps)]],
                       r_min=min(1e-8, math.sqrt(eps) / 8))
        got = lp_norm(small_bundle.surface, "grad", small_bundle.bumps[m],
                      ball, spec.p, g) ** spec.p
        want = radial_oracle(spec.delta, eps, spec.gamma)
        assert got == pytest.approx(want, rel=1e-8)


class TestAveragedNorms:
    def test_constant_function(self, flat):
        ball = EuclideanBall((0.0, 0.0), 0.3)
        g = build_grid(ball, 0.01)
        for p in (1.0, 2.0, 3.7):
            got = avg_lp_norm(flat, lambda x, y: np.full_like(x, 2.5), ball, p, g)
            assert got == pytest.approx(2.5, rel=1e-12)

    def test_matches_unaveraged(self, flat):
        phi = make_linear_bump((0.0, 0.0))
        ball = EuclideanBall((0.0, 0.0), 0.25)
        g = build_grid(ball, 0.005)
        p = 3.0
        avg = avg_lp_norm(flat, lambda x, y: phi.value(x, y), ball, p, g)
        raw = lp_norm(flat, "value", phi, ball, p, g)
        vol = integrate(g, lambda x, y: np.ones_like(x), ball)
        assert avg == pytest.approx(raw / vol ** (1.0 / p), rel=1e-12)

    def test_zero_volume_rejected(self, flat):
        ball = EuclideanBall((5.0, 5.0), 0.1)
        g = build_grid(Rectangle(0, 1, 0, 1), 0.25)  # ball disjoint from grid
        with pytest.raises(InvalidArgument):
            avg_lp_norm(flat, lambda x, y: np.ones_like(x), ball, 2.0, g)

    @given(st.floats(1.0, 4.0), st.floats(0.1, 3.0))
    @settings(max_examples=25, deadline=None)
    def test_power_mean_monotonicity(self, p, dp):
        from lpgrad.surfaces import FlatSurface

        surface = FlatSurface()
        ball = EuclideanBall((0.0, 0.0), 0.3)
        g = build_grid(ball, 0.02)
        f = lambda x, y: np.abs(x) + 0.1
        lo = avg_lp_norm(surface, f, ball, p, g)
        hi = avg_lp_norm(surface, f, ball, p + dp, g)
        assert lo <= hi * (1.0 + 1e-12)


class TestRefinement:
    def test_halving_converges(self, flat):
        phi = make_linear_bump((0.0, 0.0))
        box = Rectangle(-0.6, 0.6, -0.6, 0.6)
        vals = []
        for h in (1 / 32, 1 / 64, 1 / 128):
            g = build_grid(box, h)
            vals.append(lp_norm(flat, "grad", phi, None, 4.0, g) ** 4)
        assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
        assert abs(vals[2] - vals[1]) <= 1e-7 * vals[2]
