"""Invertible transformations: round-trips, statistics, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from cellforge.transforms import (
    ColumnwiseZScoreDataTransformation,
    LogScaleDataTransformation,
    MinMaxDataTransformation,
    SequentialDataTransformation,
    ZScoreDataTransformation,
    transform_from_dict,
)

ALL_CLASSES = [
    ZScoreDataTransformation,
    ColumnwiseZScoreDataTransformation,
    MinMaxDataTransformation,
    LogScaleDataTransformation,
]


def varied(shape=(20, 3), seed=0, positive=False):
    rng = np.random.default_rng(seed)
    x = rng.normal(5.0, 2.0, shape)
    return np.abs(x) + 0.1 if positive else x


class TestRoundTrips:
    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_inverse_recovers_input(self, cls):
        x = varied(positive=True)
        t = cls().fit(x)
        np.testing.assert_allclose(t.inverse_transform(t.transform(x)), x, atol=1e-9)

    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_round_trip_on_unseen_data(self, cls):
        t = cls().fit(varied(seed=1, positive=True))
        y = varied(seed=2, positive=True)
        np.testing.assert_allclose(t.inverse_transform(t.transform(y)), y, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(
        x=arrays(
            np.float64,
            array_shapes(min_dims=1, max_dims=2, min_side=2, max_side=12),
            elements=st.floats(0.01, 1e6),
        )
    )
    def test_round_trip_property(self, x):
        for cls in ALL_CLASSES:
            try:
                t = cls().fit(x)
            except ValueError:
                continue  # degenerate sample for this transform
            np.testing.assert_allclose(t.inverse_transform(t.transform(x)), x, atol=1e-9 * max(1.0, np.abs(x).max()))

    def test_sequential_round_trip(self):
        x = varied(positive=True)
        t = SequentialDataTransformation(
            [LogScaleDataTransformation(), ZScoreDataTransformation()]
        ).fit(x)
        np.testing.assert_allclose(t.inverse_transform(t.transform(x)), x, atol=1e-9)


class TestStatistics:
    def test_zscore_uses_global_population_moments(self):
        x = varied()
        t = ZScoreDataTransformation().fit(x)
        assert t.mean_ == x.mean()
        assert t.std_ == x.std()  # population, not sample
        out = t.transform(x)
        assert abs(out.mean()) < 1e-12
        assert abs(out.std() - 1.0) < 1e-12

    def test_columnwise_zscore_normalizes_each_column(self):
        x = varied()
        out = ColumnwiseZScoreDataTransformation().fit(x).transform(x)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)

    def test_global_and_columnwise_differ_on_offset_columns(self):
        x = np.column_stack([np.arange(10.0), np.arange(10.0) + 100.0])
        g = ZScoreDataTransformation().fit(x).transform(x)
        c = ColumnwiseZScoreDataTransformation().fit(x).transform(x)
        assert not np.allclose(g, c)
        np.testing.assert_allclose(c[:, 0], c[:, 1], atol=1e-12)

    def test_minmax_maps_to_unit_interval(self):
        x = varied()
        out = MinMaxDataTransformation().fit(x).transform(x)
        assert out.min() == 0.0 and out.max() == 1.0

    def test_log_scale_is_base_ten(self):
        t = LogScaleDataTransformation().fit(np.array([1.0, 10.0]))
        np.testing.assert_array_equal(t.transform(np.array([1.0, 100.0])), [0.0, 2.0])

    def test_fit_row_count_records_training_rows(self):
        t = ZScoreDataTransformation().fit(varied(shape=(17, 2)))
        assert t.fit_row_count == 17


class TestErrors:
    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_transform_before_fit(self, cls):
        with pytest.raises(ValueError, match="not fitted"):
            cls().transform(np.ones(3))

    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_fit_rejects_empty(self, cls):
        with pytest.raises(ValueError, match="empty"):
            cls().fit(np.array([]))

    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_fit_rejects_non_finite(self, cls):
        with pytest.raises(ValueError, match="non-finite"):
            cls().fit(np.array([1.0, np.nan]))

    def test_zscore_rejects_constant_data(self):
        with pytest.raises(ValueError, match="deviation is zero"):
            ZScoreDataTransformation().fit(np.full(5, 3.0))

    def test_columnwise_rejects_constant_column(self):
        x = np.column_stack([np.arange(5.0), np.full(5, 2.0)])
        with pytest.raises(ValueError, match="zero standard deviation"):
            ColumnwiseZScoreDataTransformation().fit(x)

    def test_minmax_rejects_constant_data(self):
        with pytest.raises(ValueError, match="max equals min"):
            MinMaxDataTransformation().fit(np.full(4, 1.0))

    def test_log_rejects_non_positive(self):
        with pytest.raises(ValueError, match="strictly positive"):
            LogScaleDataTransformation().fit(np.array([1.0, 0.0]))
        t = LogScaleDataTransformation().fit(np.array([1.0, 2.0]))
        with pytest.raises(ValueError, match="strictly positive"):
            t.transform(np.array([-1.0]))

    def test_sequential_needs_children(self):
        with pytest.raises(ValueError, match="at least one child"):
            SequentialDataTransformation([])


class TestSerialization:
    @pytest.mark.parametrize("cls", ALL_CLASSES)
    def test_json_state_round_trip(self, cls):
        import json

        x = varied(positive=True)
        t = cls().fit(x)
        payload = json.loads(json.dumps(t.to_dict()))
        back = transform_from_dict(payload)
        y = varied(seed=9, positive=True)
        np.testing.assert_array_equal(back.transform(y), t.transform(y))
        np.testing.assert_array_equal(back.inverse_transform(y), t.inverse_transform(y))

    def test_sequential_state_round_trip(self):
        x = varied(positive=True)
        t = SequentialDataTransformation(
            [LogScaleDataTransformation(), MinMaxDataTransformation()]
        ).fit(x)
        back = transform_from_dict(t.to_dict())
        np.testing.assert_array_equal(back.transform(x), t.transform(x))

    def test_to_dict_requires_fit(self):
        with pytest.raises(ValueError, match="not fitted"):
            ZScoreDataTransformation().to_dict()

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown transformation"):
            transform_from_dict({"name": "Mystery", "state": {}})


class TestSequentialSemantics:
    def test_children_are_fit_on_chained_output(self):
        x = np.array([1.0, 10.0, 100.0])
        t = SequentialDataTransformation(
            [LogScaleDataTransformation(), ZScoreDataTransformation()]
        ).fit(x)
        z = t.transformations[1]
        logs = np.log10(x)
        assert z.mean_ == logs.mean()
        assert z.std_ == logs.std()

    def test_order_matters(self):
        x = np.array([1.0, 10.0, 100.0])
        a = SequentialDataTransformation(
            [LogScaleDataTransformation(), MinMaxDataTransformation()]
        ).fit(x).transform(x)
        b = SequentialDataTransformation(
            [MinMaxDataTransformation(), ZScoreDataTransformation()]
        ).fit(x).transform(x)
        assert not np.allclose(a, b)
