import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import gamma

from fracshape.potentials import Potential
from fracshape.shapes import RadialShape, ball_sandwich_radii, hausdorff_distance
from fracshape.solver import (
    SolveConfig,
    StarShapeError,
    calibrate_penalty,
    lagrange_multiplier,
    minimize,
    penalized_energy,
    total_energy,
    write_trace,
)

SQUARE = Potential("power", 2.0)
ANISO = Potential("quadratic_form", Q=[[1, 0], [0, 4]], center=(0.3, 0.0))


def ball_perimeter(s):
    return 2 * math.pi**2 * gamma(1 - s) / (s * gamma(2 - s / 2) * gamma(1 - s / 2))


def ball_curvature(s):
    return (2 - s) * ball_perimeter(s) / (2 * math.pi)


@pytest.fixture(scope="module")
def ball_run():
    return minimize(SolveConfig(m=math.pi, K=64, n_starts=2))


@pytest.fixture(scope="module")
def aniso_run():
    return minimize(SolveConfig(m=math.pi, K=64, n_starts=2, potential=ANISO))


class TestEnergies:
    def test_unit_ball(self):
        e = total_energy(RadialShape.ball(1.0, K=256), SQUARE, 0.5)
        assert e.potential == pytest.approx(math.pi / 2, rel=1e-10)
        assert e.perimeter == pytest.approx(ball_perimeter(0.5), rel=1e-5)
        assert e.penalty == 0.0

    def test_penalty_vanishes_at_unit_volume(self):
        e = penalized_energy(RadialShape.ball(1.0, K=256), SQUARE, 0.5, mu=10.0)
        assert e.penalty == pytest.approx(0.0, abs=1e-4)

    def test_penalty_linear_in_mu(self):
        E = RadialShape.ball(1.2, K=128)
        a = penalized_energy(E, SQUARE, 0.5, mu=3.0).penalty
        b = penalized_energy(E, SQUARE, 0.5, mu=6.0).penalty
        assert a == pytest.approx(3.0 * math.pi * (1.44 - 1), rel=1e-3)
        assert b == pytest.approx(2 * a, rel=1e-14)

    def test_window(self):
        with pytest.raises(ValueError, match="escapes the window"):
            penalized_energy(RadialShape.ball(1.0, center=(2.5, 0.0), K=64), SQUARE, 0.5, mu=1.0)


    def test_ellipse_costs_more_than_ball(self):
        ball = total_energy(RadialShape.ball(1.0, K=256), SQUARE, 0.5)
        ell = total_energy(RadialShape.ellipse(1.3, 1 / 1.3, K=256), SQUARE, 0.5)
        assert ell.perimeter > ball.perimeter and ell.potential > ball.potential

    def test_potential_linear_in_scale(self):
        E = RadialShape.ellipse(1.3, 0.8, K=128)
        a = total_energy(E, SQUARE, 0.5).potential
        b = total_energy(E, lambda p: 3.0 * SQUARE(p), 0.5).potential
        assert b == pytest.approx(3 * a, rel=1e-14)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"s": 1.0}, {"s": 0.0}, {"m": 0.0}, {"mu": -1.0}, {"mode": "newton"},
        {"K": 8}, {"backtrack": 1.0}, {"tau0": 0.0}, {"n_starts": 0},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolveConfig(**kw)

    def test_sigma(self):
        assert SolveConfig(m=4 * math.pi).sigma == pytest.approx(2.0, rel=1e-15)


class TestBallMinimizer:
    def test_converged_ball(self, ball_run):
        assert ball_run.converged
        assert ball_sandwich_radii(ball_run.rescaled_about_xm, (0.0, 0.0)).r0 < 1e-8
        np.testing.assert_allclose(ball_run.x_m, 0.0, atol=1e-8)

    def test_multiplier_closed_form(self, ball_run):
        # H_s(B_1) plus the potential on the unit circle
        assert ball_run.lambda_tilde == pytest.approx(ball_curvature(0.5) + 1.0, rel=1e-4)

    def test_lagrange_gap(self, ball_run):
        assert lagrange_multiplier(ball_run).gap < 1e-3

    def test_small_volume_scaling(self):
        m = 0.1
        res = minimize(SolveConfig(m=m, K=64, n_starts=1))
        sigma = math.sqrt(m / math.pi)
        assert res.lambda_tilde == pytest.approx(ball_curvature(0.5) + sigma**2.5, rel=1e-4)
        assert res.lambda_m == pytest.approx(sigma**-0.5 * res.lambda_tilde, rel=1e-14)
        assert lagrange_multiplier(res).gap < 1e-3


class TestAnisotropic:
    def test_converges(self, aniso_run):
        assert aniso_run.converged
        assert aniso_run.el_residual < 1e-3

    def test_energy_monotone(self, aniso_run):
        energies = [row[1] for row in aniso_run.trace]
        assert np.all(np.diff(energies) <= 0)

    def test_volume_conserved(self, aniso_run):
        assert aniso_run.volume_deviation < 1e-12
        assert all(abs(row[2] - math.pi) < 1e-10 for row in aniso_run.trace)

    def test_not_a_ball(self, aniso_run):
        r0 = ball_sandwich_radii(aniso_run.rescaled_about_xm, (0.0, 0.0)).r0
        assert r0 == pytest.approx(0.0905, abs=2e-3)
        np.testing.assert_allclose(aniso_run.x_m, (0.3, 0.0), atol=5e-3)

    def test_lagrange_gap(self, aniso_run):
        assert lagrange_multiplier(aniso_run).gap < 1e-3

    def test_beats_ball_competitor(self, aniso_run):
        # the volume-matched ball sitting at the minimum of the potential
        ball = total_energy(RadialShape.ball(aniso_run.sigma, center=(0.3, 0.0), K=256), ANISO, 0.5)
        assert aniso_run.physical_energy < ball.total

    def test_stationarity(self, aniso_run):
        assert aniso_run.el_residual <= 0.05 * aniso_run.lambda_tilde

    def test_small_volume_nearly_round(self):
        res = minimize(SolveConfig(m=1e-3, K=64, n_starts=2, potential=ANISO))
        assert res.converged
        assert ball_sandwich_radii(res.rescaled_about_xm, (0.0, 0.0)).r0 < 0.2

    def test_deterministic(self, aniso_run):
        again = minimize(SolveConfig(m=math.pi, K=64, n_starts=2, potential=ANISO))
        np.testing.assert_array_equal(again.shape.radii, aniso_run.shape.radii)


class TestFailures:
    def test_weak_penalty_collapses(self):
        with pytest.raises(StarShapeError):
            minimize(SolveConfig(m=math.pi, mode="penalized", mu=0.5, K=64, n_starts=1, potential=ANISO))

    def test_no_penalty_drifts(self):
        # without the volume term the potential shrinks the set until it collapses
        with pytest.raises(StarShapeError):
            minimize(SolveConfig(m=math.pi, mode="penalized", mu=0.0, K=64, n_starts=1, potential=ANISO))

    def test_unconverged_multiplier_rejected(self, ball_run):
        with pytest.raises(ValueError, match="non-converged"):
            lagrange_multiplier(replace(ball_run, converged=False))


def test_write_trace(ball_run, tmp_path):
    p = tmp_path / "trace.csv"
    write_trace(ball_run, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["iter", "energy", "volume", "lambda", "residual", "step"]
    assert len(rows) == len(ball_run.trace) + 1


def test_penalty_calibration():
    cfg = SolveConfig(m=math.pi, K=64, n_starts=1, potential=Potential("quadratic_form", Q=[[1, 0], [0, 4]]))
    pc = calibrate_penalty(cfg)
    assert pc.mu0 == 32.0
    devs = [h[1] for h in pc.history]
    assert all(b <= a for a, b in zip(devs, devs[1:]))
    r2 = minimize(replace(cfg, mode="penalized", mu=2 * pc.mu0))
    r4 = minimize(replace(cfg, mode="penalized", mu=4 * pc.mu0))
    assert hausdorff_distance(r2.physical_shape, r4.physical_shape) < 1e-2
    assert max(r2.volume_deviation, r4.volume_deviation) < 1e-3
