import numpy as np
import pytest

from tvcspec import BadRangeError, BandwidthGrid, TimeSeriesSample


class TestTimeSeriesSample:
    def test_basic_construction(self):
        s = TimeSeriesSample(np.ones((10, 2)), np.zeros(10))
        assert s.n == 10 and s.p == 2
        t = s.time_grid
        assert t[0] == 0.1 and t[-1] == 1.0
        assert np.all(np.diff(t) > 0)

    def test_rejects_nonfinite(self):
        y = np.zeros(10)
        y[3] = np.nan
        with pytest.raises(ValueError):
            TimeSeriesSample(np.ones((10, 1)), y)
        x = np.ones((10, 1))
        x[2, 0] = np.inf
        with pytest.raises(ValueError):
            TimeSeriesSample(x, np.zeros(10))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            TimeSeriesSample(np.ones((10, 1)), np.zeros(9))

    def test_immutable(self):
        s = TimeSeriesSample(np.ones((10, 2)), np.zeros(10))
        with pytest.raises(ValueError):
            s.x[0, 0] = 2.0
        with pytest.raises(ValueError):
            s.y[0] = 2.0

    def test_regressor_block(self):
        rng = np.random.default_rng(0)
        s = TimeSeriesSample(rng.normal(size=(12, 3)), rng.normal(size=12))
        sub = s.regressor_block(1)
        assert sub.p == 2
        np.testing.assert_array_equal(sub.x, s.x[:, 1:])


class TestBandwidthGrid:
    def test_single(self):
        g = BandwidthGrid.single(0.2)
        assert g.values == (0.2,)
        assert not g.has_rate_form

    def test_from_anchor_rate_form(self):
        g = BandwidthGrid.from_anchor(0.25, n=400)
        assert len(g) == 3
        np.testing.assert_allclose(g.values, (0.25 / 1.5, 0.25, 0.375))
        assert g.has_rate_form
        scale = 400 ** (2.0 / 9.0)
        np.testing.assert_allclose(g.c_min, 0.25 / 1.5 * scale)
        np.testing.assert_allclose(g.c_max, 0.375 * scale)
        assert g.middle == 0.25

    def test_validation(self):
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=())
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=(0.2, 0.2))
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=(0.3, 0.2))
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=(0.0,))

    def test_large_bandwidth_warns_not_errors(self):
        # the published study itself uses 1.5 * 0.35 = 0.525
        with pytest.warns(UserWarning, match="recommended range"):
            g = BandwidthGrid.from_anchor(0.35, n=400)
        assert g.values[-1] == pytest.approx(0.525)

    def test_gamma_outside_window_warns(self):
        with pytest.warns(UserWarning, match="gamma"):
            BandwidthGrid(values=(0.1, 0.2), gamma=0.3, c_min=0.5, c_max=1.0)

    def test_rate_form_needs_all_fields(self):
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=(0.1, 0.2), gamma=2.0 / 9.0)
        with pytest.raises(BadRangeError):
            BandwidthGrid(values=(0.1, 0.2), gamma=2.0 / 9.0, c_min=1.0, c_max=1.0)
