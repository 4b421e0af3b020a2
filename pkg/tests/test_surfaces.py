import math

import numpy as np
import pytest

from conftest import scalar
from lpgrad.errors import InvalidArgument
from lpgrad.fields import combine, make_cutoff, make_linear_bump
from lpgrad.quadrature import Rectangle, build_grid, integrate
from lpgrad.surfaces import (ConstantFactorSurface, PatchedSurface,
                             laplace_beltrami, min_ricci, riem_grad_norm,
                             rho_k, volume_density)


def fd5_log_laplacian(surface, x, y, h=1e-4):
    def L(a, b):
        return np.log(surface.factor(a, b))
    return scalar((L(x + h, y) + L(x - h, y) + L(x, y + h) + L(x, y - h)
                   - 4.0 * L(x, y)) / h ** 2)


class TestOperators:
    def test_flat_reduction(self, flat):
        u = make_linear_bump((0.0, 0.0))
        x, y = 0.31, 0.12
        assert scalar(laplace_beltrami(flat, u, x, y)) == scalar(u.laplacian(x, y))

    def test_linear_region_zero_regardless_of_factor(self, small_bundle):
        u = small_bundle.bumps[0]
        s = small_bundle.surface
        for pt in [(0.0, 0.0), (0.1, 0.05), (-0.2, 0.1)]:
            assert scalar(laplace_beltrami(s, u, *pt)) == 0.0

    def test_constant_factor_scaling(self):
        s = ConstantFactorSurface(0.5)
        u = make_cutoff(0.25, 0.5)
        x, y = 0.3, 0.1
        assert scalar(laplace_beltrami(s, u, x, y)) == pytest.approx(
            4.0 * scalar(u.laplacian(x, y)), rel=1e-14)

    def test_grad_norm_flat_linear(self, flat, small_bundle):
        u = small_bundle.bumps[0]
        assert scalar(riem_grad_norm(flat, u, 0.1, 0.05)) == 1.0

    def test_grad_norm_constant_function(self, flat):
        u = combine([(1.0, make_cutoff(0.3, 0.6)), (-1.0, make_cutoff(0.3, 0.6))])
        assert scalar(riem_grad_norm(flat, u, 0.1, 0.0)) == 0.0

    def test_grad_norm_scaling(self, small_bundle):
        s = ConstantFactorSurface(0.1)
        u = small_bundle.bumps[0]
        assert scalar(riem_grad_norm(s, u, 0.05, 0.0)) == pytest.approx(10.0, rel=1e-14)

    def test_volume_density(self, flat):
        assert scalar(volume_density(flat, 0.2, 0.3)) == 1.0
        assert scalar(volume_density(ConstantFactorSurface(0.5), 0, 0)) == 0.25
        s = PatchedSurface([(0.0, 0.0)], [0.1], 1.0, 0.1)
        # lambda(0) = eps^beta, density = eps^(2 beta)
        assert scalar(volume_density(s, 0.0, 0.0)) == pytest.approx(0.01, rel=1e-14)


class TestCurvature:
    def test_flat_zero(self, flat):
        assert scalar(min_ricci(flat, 0.4, -0.2)) == 0.0

    def test_radial_formula_at_center(self):
        s = PatchedSurface([(0.0, 0.0)], [0.1], 1.0, 0.1)
        # Delta_e log(r^2+eps) = 4 eps/(r^2+eps)^2, so at the center the
        # eigenvalue is -4 beta eps^-(2 beta + 1)
        assert scalar(min_ricci(s, 0.0, 0.0)) == pytest.approx(-4000.0, rel=1e-12)

    def test_constant_factor_flat(self):
        s = ConstantFactorSurface(0.37)
        assert scalar(min_ricci(s, 1.0, 2.0)) == 0.0

    def test_matches_finite_differences(self, small_bundle, remark4):
        # non-degenerate points: where Delta log(lambda) is not a near-total
        # cancellation at the finite-difference step size
        mild = PatchedSurface([(0.0, 0.0)], [0.01], 1.0, 0.1)
        for s, pts in [
            (small_bundle.surface, [(0.11, 0.0), (0.108, 0.02), (1.115, 0.01)]),
            (mild, [(0.02, 0.01), (0.05, 0.02), (0.11, 0.0)]),
            (remark4, [(4.3, 0.05), (4.05, 0.1), (8.2, 0.0)]),
        ]:
            for x, y in pts:
                exact = scalar(min_ricci(s, x, y))
                fd = -fd5_log_laplacian(s, x, y) / scalar(s.factor(x, y)) ** 2
                scale = max(abs(exact), abs(fd), 1e-6)
                assert abs(exact - fd) <= 1e-4 * scale, (s.description, x, y)

    def test_double_flat_convention(self, remark4):
        x, y = 4.3, 0.05
        lam = scalar(remark4.factor(x, y))
        assert scalar(min_ricci(remark4, x, y, "double_flat")) == pytest.approx(
            scalar(min_ricci(remark4, x, y)) * 2.0 * lam ** 2, rel=1e-12)
        with pytest.raises(InvalidArgument):
            min_ricci(remark4, x, y, "bogus")


class TestRhoK:
    def test_flat_zero_deficit(self, flat):
        assert scalar(rho_k(flat, 0.0, 0.0, 0.0)) == 0.0

    def test_definition(self, small_bundle):
        s = small_bundle.surface
        rng = np.random.default_rng(5)
        x = rng.uniform(-0.3, 0.3, 200)
        y = rng.uniform(-0.3, 0.3, 200)
        for K in (0.0, 1.0, -2.0):
            a = min_ricci(s, x, y) - K
            expected = np.where(a < 0, -a, 0.0)
            np.testing.assert_allclose(rho_k(s, x, y, K), expected, rtol=0, atol=0)

    def test_nonnegative_part(self, flat):
        # min Ric = 0 >= (n-1)K for K <= 0, hence zero deficit
        assert scalar(rho_k(flat, 1.0, 1.0, -1.0)) == 0.0

    def test_dimension_guard(self, flat):
        with pytest.raises(InvalidArgument):
            rho_k(flat, 0.0, 0.0, 0.0, n=1)


class TestSurfaceInvariants:
    def test_factor_bounds_and_far_field(self, small_bundle, remark4):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 4, 3000)
        y = rng.uniform(-1, 1, 3000)
        for s in (small_bundle.surface, remark4):
            lam = s.factor(x, y)
            assert np.all(lam > 0.0) and np.all(lam <= 1.0)
        lam = small_bundle.surface.factor(x, y)
        outside = np.ones_like(x, dtype=bool)
        for cx, cy in small_bundle.spec.centers:
            outside &= (x - cx) ** 2 + (y - cy) ** 2 > 0.125 ** 2
        np.testing.assert_array_equal(lam[outside], 1.0)

    def test_conformal_dirichlet_invariance(self, flat, small_bundle, remark4):
        u = make_linear_bump((0.4, 0.1))
        box = Rectangle(-0.2, 1.0, -0.5, 0.7)
        for s in (flat, small_bundle.surface, remark4):
            centers = [c for c in s.singular_centers()
                       if box.xmin < c[0] < box.xmax and box.ymin < c[1] < box.ymax]
            grid = build_grid(box, 1.0 / 128.0, centers)

            def riem(x, y):
                return riem_grad_norm(s, u, x, y) ** 2 * volume_density(s, x, y)

            def eucl(x, y):
                gx, gy = u.gradient(x, y)
                return gx ** 2 + gy ** 2

            a = integrate(grid, riem)
            b = integrate(grid, eucl)
            assert abs(a - b) <= 1e-8 * b, s.description

    def test_integration_by_parts(self, flat, small_bundle):
        u = make_linear_bump((0.3, 0.0))
        box = Rectangle(-0.3, 0.9, -0.6, 0.6)
        for s in (flat, small_bundle.surface):
            centers = [c for c in s.singular_centers()
                       if box.xmin < c[0] < box.xmax and box.ymin < c[1] < box.ymax]
            grid = build_grid(box, 1.0 / 128.0, centers)
            dirichlet = integrate(grid, lambda x, y: riem_grad_norm(s, u, x, y) ** 2
                                  * volume_density(s, x, y))
            pairing = integrate(grid, lambda x, y: u.value(x, y)
                                * laplace_beltrami(s, u, x, y)
                                * volume_density(s, x, y))
            assert abs(dirichlet + pairing) <= 1e-6 * dirichlet


class TestPatchedSurfaceGuards:
    def test_overlapping_patches_rejected(self):
        with pytest.raises(InvalidArgument):
            PatchedSurface([(0.0, 0.0), (0.2, 0.0)], [0.01, 0.01], 1.0, 0.1)

    def test_factor_above_one_rejected(self):
        with pytest.raises(InvalidArgument):
            PatchedSurface([(0.0, 0.0)], [1.5], 1.0, 0.1)

    def test_mismatched_lengths(self):
        with pytest.raises(InvalidArgument):
            PatchedSurface([(0.0, 0.0)], [0.1, 0.2], 1.0, 0.1)
