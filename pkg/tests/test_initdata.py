"""Initial-data construction: momentum/velocity conversions, decay
validation, and the blowup-profile calibration.

Frozen oracle values:
  * q = int_0^inf e^{-y} (1+y^2)^{-2} dy = 0.4824137928961202
    (adaptive quadrature, cross-checked with 30-digit arithmetic);
  * the discrete counterpart on the default grid (L=40, n=4001) is
    0.4824471286745776 (trapezoid quadrature of the same integrand);
  * || (1+y^2)^{-2} ||_L1 = pi/2 and sup_y y^2 (1+y^2)^{-2} = 1/4 at y=1.
"""

import numpy as np
import pytest

from contactflow.errors import DecayError, ParameterError, ShapeError
from contactflow.initdata import (
    SIGN_MIXED,
    SIGN_NONNEGATIVE,
    SIGN_NONPOSITIVE,
    blowup_profile,
    load_profile,
    momentum_from_velocity,
    rational_bump,
    save_profile,
    tabulated_profile,
    velocity_from_momentum,
)
from contactflow.kernel import centered_grid, helmholtz_apply

Q_ORACLE = 0.4824137928961202          # adaptive-quadrature value of the integral
G00_DISCRETE = 0.4824471286745776      # trapezoid value on the default grid
CENTER = 2000                           # index of y = 0 for n = 4001


class TestRationalBump:
    def test_metadata(self):
        p = rational_bump(1.0)
        assert p.sign_class == SIGN_NONNEGATIVE
        assert p.even
        assert p.decay_constant == 0.25  # max of y^2/(1+y^2)^2, attained at y = 1
        assert np.isclose(p.l1_upper_bound(), np.pi / 2, rtol=1e-15)

    def test_negative_amplitude(self):
        p = rational_bump(-2.0)
        assert p.sign_class == SIGN_NONPOSITIVE
        assert p.decay_constant == 0.5

    def test_zero_amplitude_reports_nonnegative(self):
        assert rational_bump(0.0).sign_class == SIGN_NONNEGATIVE


class TestMomentumFromVelocity:
    def test_zero_velocity(self):
        p = momentum_from_velocity(lambda y: np.zeros_like(y),
                                   second_derivative=lambda y: np.zeros_like(y))
        assert p.sign_class == SIGN_NONNEGATIVE
        assert p.even
        assert np.all(p(np.linspace(-5, 5, 11)) == 0.0)

    def test_rational_velocity_pair(self):
        p = momentum_from_velocity(
            lambda y: 1 / (1 + y**2),
            second_derivative=lambda y: (6 * y**2 - 2) / (1 + y**2) ** 3,
        )
        y = np.array([0.0, 0.5, 1.2, 1.5, 2.0])
        expect = (y**4 - 4 * y**2 + 3) / (1 + y**2) ** 3
        assert np.allclose(p(y), expect, rtol=1e-12)
        # negative for 1 < y^2 < 3, so the momentum changes sign
        assert p.sign_class == SIGN_MIXED
        assert p.even

    def test_sampled_path_cross_checks_analytic(self):
        y = centered_grid(40.0, 4001)
        h = y[1] - y[0]
        g = 1 / (1 + y**2)
        p = momentum_from_velocity(g, h)
        probe = np.linspace(-10, 10, 41)
        # second-difference accuracy: (h^2/12) g'''' ~ 8e-4 near the center
        assert np.allclose(p(probe), (probe**4 - 4 * probe**2 + 3) / (1 + probe**2) ** 3,
                           atol=1e-3)

    def test_gaussian_velocity_has_finite_decay_constant(self):
        p = momentum_from_velocity(
            lambda y: np.exp(-(y**2)),
            second_derivative=lambda y: (4 * y**2 - 2) * np.exp(-(y**2)),
        )
        # numerical maximization oracle: max y^2 |(3-4y^2)| e^{-y^2} ~ 1.43767
        assert abs(p.decay_constant - 1.4377) <= 2e-3

    def test_slow_decay_raises(self):
        with pytest.raises(DecayError):
            momentum_from_velocity(lambda y: np.zeros_like(y),
                                   second_derivative=lambda y: -1 / (1 + np.abs(y)))

    def test_insufficient_samples(self):
        with pytest.raises(ShapeError):
            momentum_from_velocity(np.array([1.0, 2.0]), 0.1)
        with pytest.raises(ParameterError):
            momentum_from_velocity(np.array([1.0, 2.0, 3.0, 4.0]), 0.1)  # even count
        with pytest.raises(ParameterError):
            momentum_from_velocity(lambda y: y)  # missing second derivative


class TestVelocityFromMomentum:
    def test_zero_profile(self):
        f = velocity_from_momentum(rational_bump(0.0), 10.0, 101)
        assert np.all(f.g == 0.0) and np.all(f.g_y == 0.0)

    def test_center_velocity_regression(self):
        f = velocity_from_momentum(rational_bump(1.0), 40.0, 4001)
        assert abs(f.g[CENTER] - G00_DISCRETE) <= 1e-12   # frozen discrete value
        assert abs(f.g[CENTER] - Q_ORACLE) <= 1e-3        # vs adaptive quadrature

    def test_nonnegative_momentum_gives_nonnegative_velocity(self):
        f = velocity_from_momentum(rational_bump(1.0), 40.0, 801)
        assert np.all(f.g >= 0.0)

    def test_even_momentum_gives_even_velocity(self):
        f = velocity_from_momentum(rational_bump(1.0), 40.0, 801)
        assert np.max(np.abs(f.g - f.g[::-1])) <= 1e-13

    def test_linearity(self):
        base = velocity_from_momentum(rational_bump(1.0), 40.0, 801)
        doubled = velocity_from_momentum(rational_bump(2.0), 40.0, 801)
        assert np.array_equal(doubled.g, 2.0 * base.g)  # exact for powers of two
        scaled = velocity_from_momentum(rational_bump(3.0), 40.0, 801)
        assert np.allclose(scaled.g, 3.0 * base.g, rtol=1e-14)

    def test_round_trip_momentum_velocity_momentum(self):
        p = rational_bump(1.0)
        y = centered_grid(40.0, 4001)
        h = y[1] - y[0]
        f = velocity_from_momentum(p, 40.0, 4001)
        back, interior = helmholtz_apply(f.g, h)
        err = np.abs(back - p(y))[interior & (np.abs(y) <= 32.0)]
        assert np.max(err) <= 1e-3

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            velocity_from_momentum(rational_bump(1.0), -1.0, 101)
        with pytest.raises(ParameterError):
            velocity_from_momentum(rational_bump(1.0), 40.0, 100)


class TestBlowupProfile:
    def test_scale_matches_quadrature_oracle(self):
        p = blowup_profile(-1.0)
        c = -p.amplitude
        assert abs(c - 1.0 / Q_ORACLE) / (1.0 / Q_ORACLE) <= 3e-4
        assert p.sign_class == SIGN_NONPOSITIVE
        assert p.even

    def test_target_hit_to_1e10(self):
        for target in (-1.0, -0.3, -2.5):
            p = blowup_profile(target)
            f = velocity_from_momentum(p, 40.0, 4001)
            assert abs(f.g[CENTER] - target) <= 1e-10

    def test_linearity_of_scale(self):
        c1 = -blowup_profile(-1.0).amplitude
        c2 = -blowup_profile(-2.0).amplitude
        assert c2 == 2.0 * c1

    def test_decay_constant_is_quarter_scale(self):
        p = blowup_profile(-1.0)
        # calculus oracle: y^2/(1+y^2)^2 peaks at y = 1 with value 1/4
        assert np.isclose(p.decay_constant, -p.amplitude / 4.0, rtol=1e-15)
        y = np.linspace(0, 40, 40001)
        grid_max = np.max(y**2 * np.abs(p(y)))
        assert grid_max <= p.decay_constant * (1 + 1e-9)

    def test_rejects_nonnegative_target(self):
        with pytest.raises(ParameterError):
            blowup_profile(0.0)
        with pytest.raises(ParameterError):
            blowup_profile(1.0)


class TestTabulated:
    def test_interpolation_and_support(self):
        p = tabulated_profile([-1.0, 0.0, 1.0], [0.0, 2.0, 0.0])
        assert p(np.array([0.5]))[0] == 1.0
        assert p(np.array([5.0]))[0] == 0.0
        assert p.even and p.sign_class == SIGN_NONNEGATIVE

    def test_file_round_trip(self, tmp_path):
        y = centered_grid(20.0, 201)
        p = tabulated_profile(y, (1 + y**2) ** -2)
        path = tmp_path / "profile.dat"
        save_profile(p, path)
        text = path.read_text()
        assert text.startswith("# position value")
        q = load_profile(path)
        assert np.array_equal(q.samples.positions, p.samples.positions)
        assert np.array_equal(q.samples.values, p.samples.values)

    def test_comment_lines_are_skipped(self, tmp_path):
        path = tmp_path / "t.dat"
        path.write_text("# header\n-1.0 0.5\n# interlude\n0.0 1.0\n1.0 0.5\n")
        p = load_profile(path)
        assert p.samples.positions.size == 3

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "bad.dat"
        path.write_text("0.0 1.0 2.0\n1.0 2.0 3.0\n2.0 1.0 0.0\n")
        with pytest.raises(ShapeError):
            load_profile(path)

    def test_too_few_samples(self):
        with pytest.raises(ShapeError):
            tabulated_profile([0.0, 1.0], [1.0, 1.0])
