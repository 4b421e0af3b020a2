import math

import numpy as np
import pytest

from conftest import scalar
from lpgrad.errors import InvalidArgument, InvalidSurface, OutOfDomain
from lpgrad.geodesic import distance_field, geodesic_ball, greedy_covering
from lpgrad.quadrature import Rectangle
from lpgrad.surfaces import ConstantFactorSurface, FlatSurface


class TestDistanceField:
    def test_flat_unit_distance(self, flat):
        d = distance_field(flat, (0.0, 0.0), Rectangle(-2, 2, -2, 2), 0.01)
        assert scalar(d.interpolate(1.0, 0.0)) == pytest.approx(1.0, rel=0.02)

    def test_constant_half_factor(self):
        s = ConstantFactorSurface(0.5)
        d = distance_field(s, (0.0, 0.0), Rectangle(-2, 2, -2, 2), 0.01)
        assert scalar(d.interpolate(1.0, 0.0)) == pytest.approx(0.5, rel=0.02)

    def test_deformed_at_most_euclidean(self, small_bundle):
        box = Rectangle(-0.5, 3.5, -0.5, 0.5)
        h = 1 / 64
        dg = distance_field(small_bundle.surface, (2.0, 0.0), box, h)
        de = distance_field(FlatSurface(), (2.0, 0.0), box, h)
        assert np.all(dg.values <= de.values + 1e-12)

    def test_lipschitz_along_grid_lines(self, small_bundle):
        # along the source's own row the flat marching is exact, so the
        # deformed distance is at most the Euclidean offset
        box = Rectangle(-0.5, 3.5, -0.5, 0.5)
        h = 1 / 64
        dg = distance_field(small_bundle.surface, (2.0, 0.0), box, h)
        xs, ys = dg.lattice()
        j = int(round((0.0 - dg.y0) / h))
        assert np.all(dg.values[:, j] <= np.abs(xs - 2.0) + 1e-12)

    def test_source_outside_domain(self, flat):
        with pytest.raises(InvalidArgument):
            distance_field(flat, (5.0, 0.0), Rectangle(0, 1, 0, 1), 0.1)

    def test_negative_factor_rejected(self):
        class Bad(FlatSurface):
            def factor(self, x, y):
                return np.zeros_like(np.atleast_1d(np.asarray(x, dtype=float)))

        with pytest.raises(InvalidSurface):
            distance_field(Bad(), (0.5, 0.5), Rectangle(0, 1, 0, 1), 0.1)

    def test_convergence_order(self, flat):
        errs = []
        for h in (0.02, 0.01, 0.005):
            d = distance_field(flat, (0.0, 0.0), Rectangle(-1, 1, -1, 1), h,
                               init_radius=0.1)
            xs, ys = d.lattice()
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            true = np.hypot(X, Y)
            m = true > 0
            errs.append(np.max(np.abs(d.values - true)[m] / true[m]))
        assert math.log2(errs[0] / errs[1]) >= 0.9
        assert math.log2(errs[1] / errs[2]) >= 0.9


class TestGeodesicBall:
    def test_flat_ball_is_near_disk(self, flat):
        h = 0.01
        d = distance_field(flat, (0.0, 0.0), Rectangle(-2, 2, -2, 2), h)
        ball = geodesic_ball(d, 1.0)
        ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        inner = ball.contains(0.96 * np.cos(ang), 0.96 * np.sin(ang))
        outer = ball.contains(1.04 * np.cos(ang), 1.04 * np.sin(ang))
        assert np.all(inner)
        assert not np.any(outer)

    def test_contains_euclidean_ball(self, small_bundle):
        # factor <= 1 makes every geodesic ball contain the Euclidean one
        box = Rectangle(-2.0, 2.0, -2.0, 2.0)
        d = distance_field(small_bundle.surface, (0.3, 0.0), box, 1 / 64)
        ball = geodesic_ball(d, 1.0)
        ang = np.linspace(0, 2 * np.pi, 128, endpoint=False)
        for r in (0.3, 0.6, 0.9):
            pts_in = ball.contains(0.3 + r * np.cos(ang), r * np.sin(ang))
            assert np.all(pts_in), r

    def test_tiny_radius_contains_only_source(self, flat):
        h = 0.05
        d = distance_field(flat, (0.0, 0.0), Rectangle(-1, 1, -1, 1), h)
        ball = geodesic_ball(d, 1e-6)
        assert scalar(ball.contains(0.0, 0.0)) == 1
        assert not scalar(ball.contains(3 * h, 0.0))

    def test_radius_beyond_domain(self, flat):
        d = distance_field(flat, (0.0, 0.0), Rectangle(-1, 1, -1, 1), 0.05)
        with pytest.raises(OutOfDomain):
            geodesic_ball(d, 1.5)
        with pytest.raises(InvalidArgument):
            geodesic_ball(d, -0.1)


class TestGreedyCovering:
    def test_flat_unit_square(self, flat):
        rep = greedy_covering(flat, Rectangle(0, 1, 0, 1), 0.25, 1 / 64)
        assert rep.coverage_ok
        assert rep.disjointness_ok
        assert rep.overlap_count <= 25
        assert rep.max_coverage_distance < 0.125 + rep.tolerance
        assert rep.min_pairwise_distance >= 0.125 - rep.tolerance

    def test_overlap_matches_brute_force(self, flat):
        rep = greedy_covering(flat, Rectangle(0, 1, 0, 1), 0.25, 1 / 64)
        X, Y, member = rep.lattice_xy
        counts = np.zeros(X.shape, dtype=int)
        for f in rep.center_fields:
            counts += (f.values < rep.R)
        assert int(counts[member].max()) == rep.overlap_count

    def test_single_point_region(self, flat):
        h = 1 / 16
        region = Rectangle(0.5 - h / 4, 0.5 + h / 4, 0.5 - h / 4, 0.5 + h / 4)
        rep = greedy_covering(flat, region, 0.25, h)
        assert len(rep.centers) == 1
        assert rep.overlap_count == 1
        assert rep.coverage_ok and rep.disjointness_ok

    def test_empty_region(self, flat):
        from lpgrad.quadrature import EuclideanBall

        # strict ball membership with the nearest lattice node at distance
        # h sqrt(2)/8 > h/8, so no lattice point belongs to the region
        h = 1 / 16
        region = EuclideanBall((0.5, 0.5), h / 8)
        with pytest.raises(InvalidArgument):
            greedy_covering(flat, region, 0.25, h)

    def test_radius_hypothesis(self, flat):
        with pytest.raises(InvalidArgument):
            greedy_covering(flat, Rectangle(0, 1, 0, 1), 0.75, 1 / 16)

    def test_maximality(self, flat):
        # greedy termination leaves no lattice point R/2 away from all centers
        rep = greedy_covering(flat, Rectangle(0, 1, 0, 1), 0.4, 1 / 32)
        X, Y, member = rep.lattice_xy
        mindist = np.full(X.shape, np.inf)
        for f in rep.center_fields:
            np.minimum(mindist, f.values, out=mindist)
        assert np.all(mindist[member] < 0.2)
