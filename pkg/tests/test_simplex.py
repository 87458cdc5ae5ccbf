"""Simplex construction rules must match their published formulas exactly."""

import math

import numpy as np
import pytest

from greybox.contopt import (
    DimensionZero,
    InitRule,
    build_simplex,
    simplex_quality,
)


class TestPfeffer:
    def test_all_nonzero_start(self):
        # Substituting x1 = (1, 1): coordinate i-1 becomes 1.05 * x1[i-1].
        s = build_simplex(InitRule.pfeffer(), (1.0, 1.0))
        expected = np.array([[1.0, 1.0], [1.05 * 1.0, 1.0], [1.0, 1.05 * 1.0]])
        assert np.array_equal(s.points, expected)

    def test_origin_start_takes_zero_branch(self):
        # Substituting x1 = (0, 0): the zero branch puts 0.00025 per coordinate.
        s = build_simplex(InitRule.pfeffer(), (0.0, 0.0))
        expected = np.array([[0.0, 0.0], [0.00025, 0.0], [0.0, 0.00025]])
        assert np.array_equal(s.points, expected)

    def test_case_split_is_exact_equality_with_zero(self):
        # A coordinate of 1e-300 is "nonzero" and takes the 1.05 branch;
        # the resulting simplex is tiny, which is the documented pitfall.
        s = build_simplex(InitRule.pfeffer(), (1e-300, 5.0))
        assert s.points[1, 0] == 1.05 * 1e-300
        assert s.points[2, 1] == 1.05 * 5.0

    def test_property_case_split_over_random_starts(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            x1 = rng.uniform(-10, 10, n)
            # Sprinkle exact zeros to hit both branches.
            zero_mask = rng.uniform(size=n) < 0.3
            x1[zero_mask] = 0.0
            s = build_simplex(InitRule.pfeffer(), x1)
            assert np.array_equal(s.points[0], x1)
            for i in range(n):
                expected = 1.05 * x1[i] if x1[i] != 0.0 else 0.00025
                assert s.points[i + 1, i] == expected
                # Every other coordinate of point i+1 is untouched.
                others = np.delete(s.points[i + 1], i)
                assert np.array_equal(others, np.delete(x1, i))


class TestNashOptim:
    def test_unit_start(self):
        # Substituting x1 = (1, 0): offset is 0.1 * max|x1| = 0.1.
        s = build_simplex(InitRule.nash_optim(), (1.0, 0.0))
        expected = np.array([[1.0, 0.0], [1.1, 0.0], [1.0, 0.1]])
        assert np.array_equal(s.points, expected)

    def test_zero_start_builds_coincident_points(self):
        # The literal formula gives offset 0; construction does not patch it.
        s = build_simplex(InitRule.nash_optim(), (0.0, 0.0))
        assert np.array_equal(s.points, np.zeros((3, 2)))
        assert simplex_quality(s).degenerate

    def test_offset_uses_largest_coordinate(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            x1 = rng.uniform(-3, 3, n)
            s = build_simplex(InitRule.nash_optim(), x1)
            step = 0.1 * np.max(np.abs(x1))
            for i in range(n):
                assert s.points[i + 1, i] == x1[i] + step


class TestRegionOfInterest:
    def test_explicit_step(self):
        s = build_simplex(InitRule.region_of_interest(0.5), (0.0, 0.0))
        expected = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]])
        assert np.array_equal(s.points, expected)

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            InitRule.region_of_interest(0.0)

    def test_zero_dimension_rejected(self):
        with pytest.raises(DimensionZero):
            build_simplex(InitRule.pfeffer(), np.array([]))


class TestQuality:
    def test_pfeffer_near_axis_is_badly_conditioned(self):
        # Edges from (1, 0): (0.05, 0) and (0, 0.00025); ratio 200.
        q = simplex_quality(build_simplex(InitRule.pfeffer(), (1.0, 0.0)))
        assert q.min_edge == pytest.approx(0.00025)
        assert q.max_edge == pytest.approx(0.05)
        assert q.edge_ratio == pytest.approx(200.0)
        assert not q.degenerate

    def test_nash_is_isotropic_away_from_origin(self):
        q = simplex_quality(build_simplex(InitRule.nash_optim(), (1.0, 0.0)))
        assert q.edge_ratio == pytest.approx(1.0)
        assert not q.degenerate

    def test_coincident_points_have_zero_volume(self):
        q = simplex_quality(build_simplex(InitRule.nash_optim(), (0.0, 0.0)))
        assert q.volume == 0.0
        assert q.degenerate
        assert math.isinf(q.edge_ratio)

    def test_diameter_is_max_pairwise_distance(self):
        q = simplex_quality(build_simplex(InitRule.region_of_interest(0.5), (0.0, 0.0)))
        assert q.diameter == pytest.approx(0.5 * math.sqrt(2.0))

    def test_volume_matches_det_formula(self):
        s = build_simplex(InitRule.region_of_interest(2.0), (1.0, 1.0, 1.0))
        # Edge matrix is 2 I; volume = 8 / 3! = 4/3.
        assert simplex_quality(s).volume == pytest.approx(8.0 / 6.0)
