import numpy as np
import pytest

from streamcpd import (
    Observation,
    ParameterError,
    Stream,
    difference,
    standardize_apply,
    standardize_fit,
    standardize_invert,
)


class TestDifference:
    def test_scalar_example(self):
        out = difference(Stream.from_values([1.0, 3.0, 6.0]))
        np.testing.assert_array_equal(out.values[:, 0], [2.0, 3.0])
        np.testing.assert_array_equal(out.times, [2, 3])

    def test_constant_stream_becomes_zeros(self):
        out = difference(Stream.from_values(np.full((10, 3), 4.2)))
        assert np.all(out.values == 0.0)

    def test_inverts_cumulative_sum(self):
        rng = np.random.default_rng(0)
        x = rng.integers(-5, 6, size=(40, 2)).astype(float)
        cum = Stream.from_values(np.cumsum(x, axis=0))
        np.testing.assert_array_equal(difference(cum).values, x[1:])

    def test_too_short_rejected(self):
        with pytest.raises(ParameterError):
            difference(Stream.from_values([[1.0]]))


class TestStandardizeFit:
    def test_two_point_example(self):
        stats = standardize_fit(Stream.from_values([0.0, 2.0]))
        assert stats.mean[0] == 1.0
        assert stats.variance[0] == 1.0  # population variance
        assert stats.count == 2

    def test_constant_dimension_named_in_error(self):
        values = np.column_stack([np.arange(5.0), np.full(5, 3.0)])
        with pytest.raises(ParameterError, match="dimension 1"):
            standardize_fit(Stream(np.arange(1, 6), values))

    def test_too_short_rejected(self):
        with pytest.raises(ParameterError):
            standardize_fit(Stream.from_values([[1.0, 2.0]]))


class TestStandardizeApply:
    def fitted(self):
        rng = np.random.default_rng(1)
        stream = Stream.from_values(rng.normal([2.0, -1.0], [3.0, 0.5], size=(200, 2)))
        return stream, standardize_fit(stream)

    def test_mean_maps_to_zero_and_mean_plus_std_to_one(self):
        _, stats = self.fitted()
        at_mean = standardize_apply(stats, Observation(1, stats.mean.copy()))
        np.testing.assert_allclose(at_mean.values, 0.0, atol=1e-12)
        at_one = standardize_apply(stats, Observation(1, stats.mean + stats.std))
        np.testing.assert_allclose(at_one.values, 1.0, atol=1e-12)

    def test_calibration_window_standardizes_to_unit_stats(self):
        stream, stats = self.fitted()
        out = standardize_apply(stats, stream)
        np.testing.assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.values.var(axis=0), 1.0, atol=1e-9)

    def test_round_trip(self):
        stream, stats = self.fitted()
        back = standardize_invert(stats, standardize_apply(stats, stream))
        np.testing.assert_allclose(back.values, stream.values, atol=1e-12)

    def test_monotone_and_argmax_preserving(self):
        stream, stats = self.fitted()
        out = standardize_apply(stats, stream)
        for dim in range(stream.d):
            order_in = np.argsort(stream.values[:, dim], kind="stable")
            order_out = np.argsort(out.values[:, dim], kind="stable")
            np.testing.assert_array_equal(order_in, order_out)
            assert np.argmax(stream.values[:, dim]) == np.argmax(out.values[:, dim])

    def test_literal_variance_denominator_mode(self):
        stream, stats = self.fitted()
        literal = standardize_apply(stats, stream, scale="variance")
        expected = (stream.values - stats.mean) / stats.variance
        np.testing.assert_allclose(literal.values, expected, atol=1e-12)
        # the literal convention does not standardize to unit variance
        assert not np.allclose(literal.values.var(axis=0), 1.0)

    def test_dimension_mismatch_rejected(self):
        _, stats = self.fitted()
        with pytest.raises(ParameterError):
            standardize_apply(stats, Stream.from_values(np.zeros((4, 3))))

    def test_unknown_scale_rejected(self):
        stream, stats = self.fitted()
        with pytest.raises(ParameterError):
            standardize_apply(stats, stream, scale="mad")
