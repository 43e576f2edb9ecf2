import numpy as np
import pytest
from hypothesis import given, strategies as st

from ecc_gof import (
    InvalidConfig,
    PointCloud,
    StepCurve,
    alpha_filtration,
    euler_curve,
    mean_curve,
    rescale_cloud,
    sup_distance,
)
from ecc_gof.curves import normalize_curve, sup_distance_argmax, _sup_segmented, _sup_union

from conftest import random_cloud


def curve_strategy(max_events=12, integer=True):
    """Random canonical step curves via from_events."""
    return st.builds(
        lambda initial, radii, jumps: StepCurve.from_events(
            initial, radii[: len(jumps)], jumps[: len(radii)],
            integer_valued=integer),
        st.integers(-5, 10) if integer else st.floats(-5, 10),
        st.lists(st.floats(0.01, 50.0), min_size=0, max_size=max_events),
        st.lists(st.integers(-4, 4) if integer else
                 st.floats(-4, 4), min_size=0, max_size=max_events),
    )


class TestStepCurveConstruction:
    def test_from_events_merges_equal_radii(self):
        c = StepCurve.from_events(3, [1.0, 1.0, 2.0], [-1, -1, +1],
                                  integer_valued=True)
        np.testing.assert_allclose(c.breakpoints, [1.0, 2.0])
        np.testing.assert_array_equal(c.values, [3, 1, 2])

    def test_from_events_folds_nonpositive_radii_into_initial(self):
        c = StepCurve.from_events(5, [0.0, -1.0, 2.0], [-1, -1, -1],
                                  integer_valued=True)
        assert c.initial_value == 3
        np.testing.assert_allclose(c.breakpoints, [2.0])

    def test_from_events_drops_zero_net_jumps(self):
        c = StepCurve.from_events(2, [1.0, 1.0], [+1, -1], integer_valued=True)
        assert c.breakpoints.size == 0
        np.testing.assert_array_equal(c.values, [2])

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(InvalidConfig):
            StepCurve(np.array([2.0, 1.0]), np.array([0.0, 1.0, 2.0]))

    def test_rejects_nonpositive_breakpoints(self):
        with pytest.raises(InvalidConfig):
            StepCurve(np.array([0.0]), np.array([1.0, 2.0]))

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(InvalidConfig):
            StepCurve(np.array([1.0]), np.array([1.0]))

    def test_rejects_non_integer_when_flagged(self):
        with pytest.raises(InvalidConfig):
            StepCurve(np.array([1.0]), np.array([0.5, 1.0]),
                      integer_valued=True)

    def test_evaluation_is_right_continuous(self):
        c = StepCurve(np.array([1.0, 2.0]), np.array([5.0, 3.0, 4.0]))
        assert c(0.0) == 5.0
        assert c(0.999) == 5.0
        assert c(1.0) == 3.0  # value jumps exactly at the breakpoint
        assert c(1.5) == 3.0
        assert c(2.0) == 4.0
        assert c(100.0) == 4.0

    def test_evaluation_vectorized(self):
        c = StepCurve(np.array([1.0]), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(c(np.array([0.0, 1.0, 3.0])), [1, 2, 2])

    def test_rejects_negative_argument(self):
        c = StepCurve(np.array([1.0]), np.array([1.0, 2.0]))
        with pytest.raises(InvalidConfig):
            c(-0.5)


class TestSerialization:
    @given(curve_strategy())
    def test_csv_round_trip(self, c):
        again = StepCurve.from_csv_text(c.to_csv_text())
        assert again == c
        assert again.integer_valued == c.integer_valued

    @given(curve_strategy(integer=False))
    def test_csv_round_trip_real_valued(self, c):
        again = StepCurve.from_csv_text(c.to_csv_text())
        assert again == c

    @given(curve_strategy())
    def test_json_round_trip(self, c):
        again = StepCurve.from_json_dict(c.to_json_dict())
        assert again == c

    def test_csv_layout(self):
        c = StepCurve(np.array([1.5]), np.array([2.0, 1.0]),
                      integer_valued=True)
        lines = c.to_csv_text().splitlines()
        assert lines[0] == "r,value"
        assert lines[1] == "0.0,2.0"
        assert lines[2] == "1.5,1.0"


class TestEulerCurve:
    def test_two_points(self):
        c = euler_curve(alpha_filtration(PointCloud(np.array([[0.0], [2.0]]))))
        np.testing.assert_allclose(c.breakpoints, [1.0])
        np.testing.assert_array_equal(c.values, [2, 1])
        assert c.integer_valued

    def test_alternating_signs(self):
        # full complex on 3 points: 3 - 3 + 1 = 1 at the end
        cloud = random_cloud(4, 3, 2)
        c = euler_curve(alpha_filtration(cloud))
        assert c.final_value == 1.0
        assert c.initial_value == 3.0


class TestRescale:
    def test_rescale_multiplies_by_nth_root(self):
        cloud = PointCloud(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0],
                                     [4.0, 4.0]]))
        scaled = rescale_cloud(cloud)
        np.testing.assert_allclose(scaled.points, cloud.points * 2.0)

    def test_rescale_1d(self):
        cloud = PointCloud(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(rescale_cloud(cloud).points,
                                   cloud.points * 3.0)

    def test_normalize_curve_divides_values(self):
        c = StepCurve(np.array([1.0]), np.array([4.0, 2.0]),
                      integer_valued=True)
        nc = normalize_curve(c, 4)
        np.testing.assert_allclose(nc.values, [1.0, 0.5])
        np.testing.assert_allclose(nc.breakpoints, c.breakpoints)
        assert not nc.integer_valued


class TestMeanCurve:
    def test_explicit_example(self):
        a = StepCurve.from_events(2, [1.0], [-1], integer_valued=True)
        b = StepCurve.from_events(4, [2.0], [-2], integer_valued=True)
        m = mean_curve([a, b])
        assert m(0.0) == 3.0
        assert m(1.5) == 2.5
        assert m(2.5) == 1.5

    @given(st.lists(curve_strategy(), min_size=1, max_size=6))
    def test_pointwise_mean_everywhere(self, curves):
        m = mean_curve(curves)
        grid = np.unique(np.concatenate(
            [c.breakpoints for c in curves]
            + [np.array([0.0, 0.5, 123.0])]))
        grid = grid[grid >= 0]
        expected = np.mean([c(grid) for c in curves], axis=0)
        np.testing.assert_allclose(m(grid), expected, atol=1e-12)

    def test_mean_of_identical_curves_is_identity(self):
        c = StepCurve.from_events(3, [1.0, 2.0], [-1, -1], integer_valued=True)
        m = mean_curve([c, c, c])
        np.testing.assert_allclose(m.breakpoints, c.breakpoints)
        np.testing.assert_allclose(m.values, c.values)


class TestSupDistance:
    def test_explicit_example(self):
        a = StepCurve(np.array([1.0, 3.0]), np.array([4.0, 2.0, 5.0]))
        b = StepCurve(np.array([2.0]), np.array([3.0, 3.0 + 0.25]))
        # |a-b| piecewise: [0,1): 1; [1,2): 1; [2,3): 1.25; [3,inf): 1.75
        assert sup_distance(a, b) == pytest.approx(1.75)

    def test_identical_curves_have_zero_distance(self):
        a = StepCurve.from_events(5, [1.0], [-2], integer_valued=True)
        assert sup_distance(a, a) == 0.0

    @given(curve_strategy(), curve_strategy())
    def test_symmetric(self, a, b):
        assert sup_distance(a, b) == sup_distance(b, a)

    @given(curve_strategy(), curve_strategy(), curve_strategy())
    def test_triangle_inequality(self, a, b, c):
        ab = sup_distance(a, b)
        bc = sup_distance(b, c)
        ac = sup_distance(a, c)
        assert ac <= ab + bc + 1e-12

    @given(curve_strategy(), curve_strategy())
    def test_argmax_attains_sup(self, a, b):
        d, r = sup_distance_argmax(a, b)
        assert abs(a(r) - b(r)) == pytest.approx(d, abs=1e-12)

    @given(curve_strategy(max_events=40), curve_strategy(max_events=3))
    def test_segmented_equals_union_grid(self, a, b):
        assert _sup_segmented(b, a) == _sup_union(a, b)[0]

    def test_large_curve_dispatch_matches_naive(self):
        rng = np.random.default_rng(7)
        radii = np.cumsum(rng.uniform(0.001, 0.01, size=9000))
        jumps = rng.integers(-2, 3, size=9000)
        big = StepCurve.from_events(0, radii, jumps, integer_valued=True)
        small = StepCurve.from_events(1, [5.0, 9.0], [3, -4],
                                      integer_valued=True)
        assert big.breakpoints.size > 4096
        assert sup_distance(big, small) == _sup_union(big, small)[0]
