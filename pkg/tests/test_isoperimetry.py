import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from fracshape.fractional import QuadratureSpec, fractional_perimeter_mc
from fracshape.isoperimetry import (
    ball_symmetric_difference,
    fraenkel_asymmetry,
    iso_report,
    quantitative_check,
    random_fourier_corpus,
    reference_ball_perimeter,
    reference_ball_perimeter_grid,
    symmetric_rearrangement_check,
    wulff_deficit,
)
from fracshape.potentials import Potential
from fracshape.shapes import GridSet, IntervalUnion, RadialShape, rasterize


def ball_perimeter(s):
    return 2 * math.pi**2 * gamma(1 - s) / (s * gamma(2 - s / 2) * gamma(1 - s / 2))


ELLIPSE = RadialShape.ellipse(1.2, 1 / 1.2, K=512)


class TestReference:
    @pytest.mark.parametrize("s", (0.2, 0.5, 0.8))
    def test_unit_ball(self, s):
        ref = reference_ball_perimeter(s, math.pi)
        assert ref.value == pytest.approx(ball_perimeter(s), rel=1e-6)

    def test_homogeneity(self):
        a = reference_ball_perimeter(0.5, math.pi).value
        b = reference_ball_perimeter(0.5, 4 * math.pi).value
        assert b == pytest.approx(a * 4 ** 0.75, rel=1e-14)

    def test_one_dimensional(self):
        assert reference_ball_perimeter(0.5, 2.0, dim=1).value == pytest.approx(8 * 2**0.5, rel=1e-14)

    def test_nonpositive_volume(self):
        with pytest.raises(ValueError):
            reference_ball_perimeter(0.5, 0.0)

    def test_monte_carlo_agreement(self):
        ref = reference_ball_perimeter(0.5, math.pi)
        mc = fractional_perimeter_mc(RadialShape.ball(1.0, K=256), QuadratureSpec(0.5), seed=11, n_samples=100000)
        assert abs(mc.value - ref.value) <= mc.error + ref.error

    def test_grid_richardson(self):
        P = reference_ball_perimeter_grid(0.5, ns=(64, 128), depth=3)
        assert P.value == pytest.approx(ball_perimeter(0.5), rel=2e-2)


class TestAsymmetry:
    def test_ball_radial(self):
        r = fraenkel_asymmetry(RadialShape.ball(1.0, center=(0.3, -0.2), K=128))
        assert r.asymmetry < 1e-8
        np.testing.assert_allclose(r.center, (0.3, -0.2), atol=1e-6)

    def test_ball_grid(self):
        h = 2 / 128
        G = rasterize(RadialShape.ball(1.0, K=256), h)
        r = fraenkel_asymmetry(G)
        assert r.asymmetry <= 2 * h * 2 * math.pi / G.volume

    def test_grid_translation_bitwise(self):
        G = rasterize(ELLIPSE, 2 / 64)
        a = fraenkel_asymmetry(G)
        b = fraenkel_asymmetry(G.translated((5 * G.h, -3 * G.h)))
        assert a.asymmetry == b.asymmetry

    def test_two_far_balls(self):
        # two unit discs 20 apart, rasterized together
        h = 0.05
        n = int(24 / h)
        ax = -2 + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(ax, np.arange(int(4 / h)) * h - 2 + h / 2, indexing="ij")
        occ = (X**2 + Y**2 < 1) | ((X - 20) ** 2 + Y**2 < 1)
        G = GridSet((-2.0, -2.0), h, occ)
        assert fraenkel_asymmetry(G).asymmetry == pytest.approx(1.0, abs=0.02)

    def test_two_intervals(self):
        E = IntervalUnion(((0, 1), (50, 51)))
        assert fraenkel_asymmetry(E).asymmetry == pytest.approx(1.0, abs=1e-6)

    def test_ellipse_baseline(self):
        r = fraenkel_asymmetry(ELLIPSE)
        # high-resolution polygon clipping gives 0.2308635
        assert r.asymmetry == pytest.approx(0.2308635, rel=1e-5)
        assert r.asymmetry == pytest.approx(0.23086336687667128, rel=1e-9)
        np.testing.assert_allclose(r.center, 0.0, atol=1e-3)

    def test_ball_symmetric_difference_lens(self):
        d = 0.5
        lens = 2 * math.acos(d / 2) - 0.5 * d * math.sqrt(4 - d * d)
        E = RadialShape.ball(1.0, K=256)
        assert ball_symmetric_difference(E, (d, 0.0)) == pytest.approx(2 * (math.pi - lens), rel=1e-5)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=6)
    def test_translation_invariance(self, x, y):
        E = RadialShape.ellipse(1.3, 1 / 1.3, K=256)
        a = fraenkel_asymmetry(E).asymmetry
        b = fraenkel_asymmetry(E.translated((x, y))).asymmetry
        assert b == pytest.approx(a, rel=1e-5)


class TestDeficit:
    def test_ball(self):
        r = wulff_deficit(RadialShape.ball(1.0, K=256), 0.5)
        assert abs(r.deficit) <= r.deficit_error + 1e-12

    def test_ellipse_positive(self):
        r = wulff_deficit(ELLIPSE, 0.5)
        assert r.deficit - r.deficit_error > 0
        assert r.deficit == pytest.approx(0.010357868664847336, rel=1e-6)

    def test_ellipse_grid_route_agrees_in_sign(self):
        r = wulff_deficit(ELLIPSE, 0.5, method="grid", n=128)
        assert r.deficit > 0
        assert abs(r.deficit - 0.010357868664847336) <= r.deficit_error

    def test_scale_invariance(self):
        a = wulff_deficit(ELLIPSE, 0.5)
        b = wulff_deficit(ELLIPSE.scaled(0.3), 0.5)
        assert abs(a.deficit - b.deficit) <= a.deficit_error + b.deficit_error

    @given(st.integers(0, 10**6))
    @settings(max_examples=8)
    def test_nonnegative_within_error(self, seed):
        E = random_fourier_corpus(1, seed=seed, K=128)[0]
        r = wulff_deficit(E, 0.5)
        assert r.deficit >= -r.deficit_error


class TestQuantitative:
    def test_balls_rejected(self):
        with pytest.raises(ValueError, match="degenerate corpus"):
            quantitative_check([RadialShape.ball(1.0, K=128)] * 3, 0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="degenerate corpus"):
            quantitative_check([], 0.5)

    def test_small_corpus(self):
        q = quantitative_check(random_fourier_corpus(8, seed=4, K=128), 0.5)
        assert q.passed and q.c_lower > 0

    def test_ellipse_family_bounded_below(self):
        ratios = []
        for a in (1.05, 1.1, 1.2, 1.4, 1.7):
            r = iso_report(RadialShape.ellipse(a, 1 / a, K=512), 0.5)
            ratios.append(r.deficit / r.asymmetry**2)
        assert min(ratios) > 0.1

    def test_corpus_normalized(self):
        for E in random_fourier_corpus(5, seed=2):
            assert E.volume == pytest.approx(math.pi, rel=1e-12)


class TestRearrangement:
    g = Potential("power", 2.0)

    def test_centered_ball_equality(self):
        r = symmetric_rearrangement_check(RadialShape.ball(1.0, K=256), self.g, 0.5)
        assert r.passed
        assert r.perimeter_star.value == pytest.approx(r.perimeter.value, rel=1e-10)

    def test_perturbed_ball_strict(self):
        E = random_fourier_corpus(1, seed=5)[0]
        r = symmetric_rearrangement_check(E, self.g, 0.5)
        assert r.passed
        assert r.perimeter_star.value < r.perimeter.value - r.perimeter.error
        assert r.potential_star < r.potential

    def test_shifted_ball_potential(self):
        c = np.array([0.4, 0.3])
        r = symmetric_rearrangement_check(RadialShape.ball(1.0, center=c, K=256), self.g, 0.5)
        assert r.potential == pytest.approx(math.pi / 2 + math.pi * 0.25, rel=1e-10)
        assert r.potential_star == pytest.approx(math.pi / 2, rel=1e-10)
        assert r.passed

    def test_non_radial_rejected(self):
        with pytest.raises(ValueError, match="non-radial"):
            symmetric_rearrangement_check(ELLIPSE, Potential("quadratic_form", Q=[[1, 0], [0, 3]]), 0.5)
