import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_gradient, fd_gradient4, fd_laplacian, scalar
from lpgrad.errors import InvalidArgument
from lpgrad.fields import (combine, eval_jet, make_cutoff, make_linear_bump,
                           rescale)


class TestCutoff:
    def test_plateau(self):
        chi = make_cutoff(0.25, 0.5)
        v, (gx, gy), lap = eval_jet(chi, (0.1, 0.0))
        assert v == 1.0
        assert gx == 0.0 and gy == 0.0
        assert lap == 0.0

    def test_outside_support(self):
        chi = make_cutoff(0.25, 0.5)
        v, grad, lap = eval_jet(chi, (0.6, 0.0))
        assert v == 0.0 and grad == (0.0, 0.0) and lap == 0.0

    def test_transition_gradient_matches_fd(self):
        chi = make_cutoff(0.25, 0.5)
        v, (gx, gy), _ = eval_jet(chi, (0.375, 0.0))
        assert 0.0 < v < 1.0
        fgx, fgy = fd_gradient4(chi, 0.375, 0.0, h=1e-4)
        assert abs(gx - scalar(fgx)) <= 1e-6
        assert abs(gy - scalar(fgy)) <= 1e-6

    def test_transition_laplacian_matches_stencil(self):
        chi = make_cutoff(0.25, 0.5)
        _, _, lap = eval_jet(chi, (0.375, 0.0))
        assert abs(lap - scalar(fd_laplacian(chi, 0.375, 0.0, h=1e-4))) <= 1e-5

    def test_range(self):
        chi = make_cutoff(0.25, 0.5)
        r = np.linspace(0, 0.7, 500)
        vals = chi.value(r, np.zeros_like(r))
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)

    def test_invalid_radii(self):
        with pytest.raises(InvalidArgument):
            make_cutoff(0.5, 0.25)
        with pytest.raises(InvalidArgument):
            make_cutoff(0.5, 0.5)

    @given(st.floats(0.05, 0.3), st.floats(0.35, 0.9), st.floats(0.0, 1.0),
           st.floats(0.0, 2 * np.pi))
    @settings(max_examples=60, deadline=None)
    def test_cutoff_invariants(self, r_in, r_out, frac, ang):
        chi = make_cutoff(r_in, r_out)
        r = frac * 1.2 * r_out
        x, y = r * np.cos(ang), r * np.sin(ang)
        v = scalar(chi.value(x, y))
        assert 0.0 <= v <= 1.0
        if r <= r_in:
            assert v == 1.0
        if r >= r_out:
            assert v == 0.0
            assert scalar(chi.laplacian(x, y)) == 0.0


class TestLinearBump:
    def test_center_jet(self):
        phi = make_linear_bump((0.0, 0.0))
        assert eval_jet(phi, (0.0, 0.0)) == (1.0, (1.0, 0.0), 0.0)

    def test_affine_region(self):
        phi = make_linear_bump((0.0, 0.0))
        v, grad, lap = eval_jet(phi, (0.2, 0.1))
        assert grad == (1.0, 0.0)
        assert lap == 0.0
        assert v == pytest.approx(1.2, abs=1e-15)

    def test_translate_outside(self):
        phi = make_linear_bump((3.0, 0.0))
        v, _, _ = eval_jet(phi, (3.6, 0.0))
        assert v == 0.0

    def test_eval_jet_values(self):
        phi = make_linear_bump((0.0, 0.0))
        v, grad, lap = eval_jet(phi, (0.1, 0.0))
        assert v == pytest.approx(1.1, abs=1e-15)
        assert grad == (1.0, 0.0) and lap == 0.0


class TestCombine:
    def test_identity(self):
        phi = make_linear_bump((0.0, 0.0))
        one = combine([(1.0, phi)])
        rng = np.random.default_rng(7)
        pts = rng.uniform(-0.6, 0.6, size=(50, 2))
        for f, g in zip(one.jet(pts[:, 0], pts[:, 1]),
                        phi.jet(pts[:, 0], pts[:, 1])):
            np.testing.assert_array_equal(f, g)

    def test_cancellation(self):
        phi = make_linear_bump((0.0, 0.0))
        zero = combine([(1.0, phi), (-1.0, phi)])
        assert eval_jet(zero, (0.2, 0.1)) == (0.0, (0.0, 0.0), 0.0)
        assert eval_jet(zero, (5.0, 5.0)) == (0.0, (0.0, 0.0), 0.0)

    def test_uk_disjoint_supports(self):
        bumps = [make_linear_bump((m, 0.0)) for m in range(3)]
        u2 = combine([(2.0 ** (-m), bumps[m]) for m in range(3)])
        v, grad, lap = eval_jet(u2, (1.0, 0.0))
        assert v == pytest.approx(0.5, abs=1e-15)
        assert grad[0] == pytest.approx(0.5, abs=1e-15)

    def test_empty_raises(self):
        with pytest.raises(InvalidArgument):
            combine([])

    def test_restriction_to_patch(self):
        bumps = [make_linear_bump((m, 0.0)) for m in range(4)]
        uk = combine([(2.0 ** (-m), bumps[m]) for m in range(4)])
        rng = np.random.default_rng(11)
        for m in range(4):
            ang = rng.uniform(0, 2 * np.pi, 40)
            rad = rng.uniform(0, 0.5, 40)
            x = m + rad * np.cos(ang)
            y = rad * np.sin(ang)
            np.testing.assert_allclose(
                uk.value(x, y), 2.0 ** (-m) * bumps[m].value(x, y),
                rtol=0, atol=1e-15)

    def test_supports_disjoint(self):
        bumps = [make_linear_bump((m, 0.0)) for m in range(4)]
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 4, 2000)
        y = rng.uniform(-1, 1, 2000)
        active = np.zeros(2000)
        for b in bumps:
            active += (np.abs(b.value(x, y)) > 0).astype(float)
        assert np.all(active <= 1.0)


class TestJetsAgainstFiniteDifferences:
    def fields(self):
        base = make_cutoff(0.25, 0.5)
        return [
            ("cutoff", make_cutoff(0.2, 0.45), 0.5),
            ("bump", make_linear_bump((0.5, -0.2)), 0.6),
            ("rescaled", rescale(base, (1.0, 1.0), 2.0, -0.7), 0.3),
            ("sum", combine([(1.0, make_linear_bump((0.0, 0.0))),
                             (-0.5, make_cutoff(0.1, 0.4))]), 0.6),
        ]

    def test_random_probes(self):
        rng = np.random.default_rng(42)
        for name, f, spread in self.fields():
            cx, cy = f.support_center
            pts = rng.uniform(-spread, spread, size=(100, 2))
            gx_err, gy_err, lap_err = [], [], []
            gx_ref, lap_ref = [], []
            for dx, dy in pts:
                x, y = cx + dx, cy + dy
                v, (gx, gy), lap = eval_jet(f, (x, y))
                fgx, fgy = fd_gradient(f, x, y)
                flap = fd_laplacian(f, x, y)
                gx_err.append(abs(gx - scalar(fgx)))
                gy_err.append(abs(gy - scalar(fgy)))
                lap_err.append(abs(lap - scalar(flap)))
                gx_ref.append(max(abs(gx), abs(gy)))
                lap_ref.append(abs(lap))
            gscale = max(max(gx_ref), 1e-3)
            lscale = max(max(lap_ref), 1e-3)
            assert max(gx_err) <= 1e-5 * gscale + 1e-8, name
            assert max(gy_err) <= 1e-5 * gscale + 1e-8, name
            assert max(lap_err) <= 1e-5 * lscale + 1e-8, name


class TestRescale:
    def test_jet_scaling(self):
        base = make_cutoff(0.25, 0.5)
        f = rescale(base, (4.0, 0.0), 2.0, -0.5)
        # value -0.5 * base(2 (p - (4,0)))
        v = scalar(f.value(4.1, 0.0))
        assert v == pytest.approx(-0.5 * scalar(base.value(0.2, 0.0)), abs=1e-15)
        lap = scalar(f.laplacian(4.2, 0.05))
        base_lap = scalar(base.laplacian(0.4, 0.1))
        assert lap == pytest.approx(-0.5 * 4.0 * base_lap, rel=1e-13)

    def test_support_shrinks(self):
        base = make_cutoff(0.25, 0.5)
        f = rescale(base, (4.0, 0.0), 4.0, 1.0)
        assert f.support_radius == pytest.approx(0.125)
        assert scalar(f.value(4.2, 0.0)) == 0.0
