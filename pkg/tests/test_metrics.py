import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offsim.errors import (
    DegenerateFitError,
    EmptyInputError,
    EmptyPredictionError,
    LengthMismatchError,
    MetricsError,
    NonPositiveBaselineError,
    NonPositiveTdpError,
    NoSurvivingSamplesError,
    ZeroDurationError,
)
from offsim.metrics import (
    MetricsReport,
    confidence_diff,
    normalize_scaling,
    project_linear,
    stddev,
    throughput,
    throughput_per_watt,
    top1_error,
)

# Published single-VPU and CPU efficiency figures, and the four-device
# rate measurements the 16-device projection extrapolates from.
VPU_RATE_1 = 9.92984386571681
VPU_POINTS = [(1, 9.92984386571681), (2, 19.6802037735531),
              (4, 38.8560574631), (8, 77.2175736117)]


class TestThroughput:
    def test_published_rate(self):
        assert throughput(10000, 129.5) == pytest.approx(77.22007722, rel=1e-9)

    def test_zero_images(self):
        assert throughput(0, 1.0) == 0.0

    def test_plain_arithmetic(self):
        assert throughput(8, 0.2) == 40.0

    @pytest.mark.parametrize("wall", [0.0, -1.0, -0.001])
    def test_rejects_non_positive_window(self, wall):
        with pytest.raises(ZeroDurationError):
            throughput(10, wall)

    def test_rejects_negative_count(self):
        with pytest.raises(MetricsError):
            throughput(-1, 1.0)

    @given(st.integers(0, 10 ** 6), st.floats(1e-6, 1e6))
    def test_non_negative(self, n, wall):
        assert throughput(n, wall) >= 0.0


class TestThroughputPerWatt:
    def test_single_vpu_efficiency(self):
        got = throughput_per_watt(VPU_RATE_1, 2.5)
        assert got == 3.971937546286724
        assert abs(got - 3.9719375463) / 3.9719375463 < 1e-6

    def test_cpu_efficiency(self):
        got = throughput_per_watt(44.1165822597, 80)
        assert got == 0.55145727824625
        assert abs(got - 0.5514572782) / 0.5514572782 < 1e-6

    def test_zero_rate(self):
        assert throughput_per_watt(0.0, 80.0) == 0.0

    @pytest.mark.parametrize("tdp", [0.0, -2.5])
    def test_rejects_non_positive_tdp(self, tdp):
        with pytest.raises(NonPositiveTdpError):
            throughput_per_watt(10.0, tdp)

    @given(st.floats(0, 1e9), st.floats(1e-3, 1e5))
    def test_single_division(self, rate, tdp):
        assert throughput_per_watt(rate, tdp) == rate / tdp


class TestTop1Error:
    def test_hand_enumerated_third_sample_misses(self):
        preds = [[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]
        assert top1_error(preds, [0, 1, 1]) == pytest.approx(1 / 3)

    def test_perfect_one_hot(self):
        preds = np.eye(4, dtype=np.float32)
        assert top1_error(list(preds), [0, 1, 2, 3]) == 0.0

    def test_out_of_range_labels_all_miss(self):
        preds = [[0.9, 0.1], [0.2, 0.8]]
        assert top1_error(preds, [5, -1]) == 1.0

    def test_ties_break_to_lowest_index(self):
        assert top1_error([[0.5, 0.5]], [0]) == 0.0
        assert top1_error([[0.5, 0.5]], [1]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            top1_error([[1.0]], [0, 1])

    def test_no_samples(self):
        with pytest.raises(EmptyInputError):
            top1_error([], [])

    def test_empty_confidence_vector(self):
        with pytest.raises(EmptyPredictionError):
            top1_error([[]], [0])

    @settings(max_examples=50)
    @given(st.lists(st.lists(st.floats(0, 1, width=32), min_size=2, max_size=5),
                    min_size=1, max_size=10))
    def test_bounded(self, preds):
        labels = [0] * len(preds)
        err = top1_error(preds, labels)
        assert 0.0 <= err <= 1.0


class TestConfidenceDiff:
    REF = [[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]
    TEST = [[0.8, 0.2], [0.3, 0.7], [0.3, 0.7]]

    def test_filters_then_averages(self):
        # Sample 3 is wrong in the reference run, so only the first two count.
        assert confidence_diff(self.REF, self.TEST, [0, 1, 1]) == pytest.approx(0.1)

    def test_identical_runs_give_zero(self):
        assert confidence_diff(self.REF, self.REF, [0, 1, 0]) == 0.0

    def test_filtering_is_symmetric(self):
        # Sample 3: reference right, test wrong; still filtered.
        ref = [[0.9, 0.1], [0.2, 0.8], [0.9, 0.1]]
        tst = [[0.7, 0.3], [0.4, 0.6], [0.2, 0.8]]
        assert confidence_diff(ref, tst, [0, 1, 0]) == pytest.approx(0.2)

    def test_no_survivors(self):
        with pytest.raises(NoSurvivingSamplesError):
            confidence_diff([[0.1, 0.9]], [[0.2, 0.8]], [0])

    def test_out_of_range_label_skipped(self):
        with pytest.raises(NoSurvivingSamplesError):
            confidence_diff([[0.9, 0.1]], [[0.8, 0.2]], [7])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            confidence_diff([[1.0]], [[1.0], [1.0]], [0])

    @settings(max_examples=40)
    @given(st.lists(st.floats(0.5, 1.0, width=32), min_size=1, max_size=8),
           st.floats(0, 0.4))
    def test_shift_sets_the_mean(self, confs, delta):
        ref = [[c, 1.0 - c] for c in confs]
        tst = [[c - delta, 1.0 - c + delta] for c in confs]
        if any(c - delta <= 0.5 for c in confs):
            return
        got = confidence_diff(ref, tst, [0] * len(confs))
        assert got == pytest.approx(delta, abs=1e-6)


class TestNormalizeScaling:
    def test_unit_baseline(self):
        got = normalize_scaling([(1, 10.0), (2, 20.0), (4, 40.0)], 10.0)
        assert got == [(1, 1.0), (2, 2.0), (4, 4.0)]

    def test_published_eightfold(self):
        [(_, factor)] = normalize_scaling([(8, 77.2175736117)], VPU_RATE_1)
        assert factor == pytest.approx(7.776317, rel=1e-6)

    def test_empty(self):
        assert normalize_scaling([], 5.0) == []

    @pytest.mark.parametrize("baseline", [0.0, -3.0])
    def test_rejects_bad_baseline(self, baseline):
        with pytest.raises(NonPositiveBaselineError):
            normalize_scaling([(1, 1.0)], baseline)

    @given(st.floats(0.1, 1e6))
    def test_self_normalization(self, rate):
        assert normalize_scaling([(1, rate)], rate) == [(1, 1.0)]


class TestProjection:
    def test_sixteen_device_projection(self):
        got = project_linear(VPU_POINTS, 16)
        assert got == pytest.approx(154.08111510523037, rel=1e-12)
        assert abs(got - 153.0394237944) / 153.0394237944 < 0.02

    def test_exact_line_through_origin(self):
        assert project_linear([(1, 10.0), (3, 30.0)], 5) == pytest.approx(50.0)

    def test_affine_fit(self):
        assert project_linear([(1, 12.0), (2, 14.0)], 10) == pytest.approx(30.0)

    def test_single_point_scales_through_origin(self):
        assert project_linear([(4, 40.0)], 8) == pytest.approx(80.0)

    def test_single_zero_count_point_degenerate(self):
        with pytest.raises(DegenerateFitError):
            project_linear([(0, 5.0)], 8)

    def test_vertical_cluster_degenerate(self):
        with pytest.raises(DegenerateFitError):
            project_linear([(2, 19.0), (2, 21.0)], 8)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            project_linear([], 4)

    @settings(max_examples=40)
    @given(st.floats(0.5, 100), st.floats(-10, 10),
           st.lists(st.integers(1, 32), min_size=2, max_size=8, unique=True),
           st.integers(1, 64))
    def test_recovers_exact_linear_data(self, slope, intercept, counts, target):
        pts = [(c, slope * c + intercept) for c in counts]
        want = slope * target + intercept
        assert project_linear(pts, target) == pytest.approx(want, rel=1e-6, abs=1e-6)


class TestStddev:
    def test_simple_spread(self):
        assert stddev([1.0, 5.0]) == 2.0

    def test_three_points(self):
        assert stddev([1.0, 3.0, 5.0]) == pytest.approx(math.sqrt(8 / 3), rel=1e-12)

    def test_constant(self):
        assert stddev([4.2, 4.2, 4.2]) == 0.0

    def test_single_sample(self):
        assert stddev([7.0]) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            stddev([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
    def test_non_negative(self, xs):
        assert stddev(xs) >= 0.0


class TestMetricsReport:
    def test_efficiency_is_the_one_division(self):
        r = MetricsReport.create(images_per_second=VPU_RATE_1, total_tdp_watts=2.5)
        assert r.images_per_watt == VPU_RATE_1 / 2.5
        assert r.images_per_watt == throughput_per_watt(r.images_per_second,
                                                        r.total_tdp_watts)

    def test_optional_fields_default_none(self):
        r = MetricsReport.create(images_per_second=1.0, total_tdp_watts=1.0)
        assert r.top1 is None
        assert r.mean_abs_confidence_diff is None
        assert r.scaling_factor is None
        assert r.images_per_second_std == 0.0

    def test_extras_pass_through(self):
        r = MetricsReport.create(images_per_second=2.0, total_tdp_watts=4.0,
                                 top1=0.125, scaling_factor=1.0)
        assert r.images_per_watt == 0.5
        assert r.top1 == 0.125
        assert r.scaling_factor == 1.0

    def test_bad_tdp_propagates(self):
        with pytest.raises(NonPositiveTdpError):
            MetricsReport.create(images_per_second=1.0, total_tdp_watts=0.0)
