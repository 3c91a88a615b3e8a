import pytest

from patchsim.schedules import ema_schedule, lr_schedule


class TestEmaSchedule:
    def test_start_exact(self):
        assert ema_schedule(0.0) == 0.996

    def test_end_exact(self):
        assert ema_schedule(1.0) == 1.0

    def test_midpoint(self):
        assert ema_schedule(0.5) == pytest.approx(0.998, abs=1e-12)

    def test_monotone_nondecreasing(self):
        values = [ema_schedule(i / 200) for i in range(201)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_out_of_range_clamps_with_warning(self):
        with pytest.warns(UserWarning):
            assert ema_schedule(1.5) == 1.0
        with pytest.warns(UserWarning):
            assert ema_schedule(-0.1) == 0.996


class TestLrSchedule:
    def test_peak_at_warmup_end(self):
        assert lr_schedule(0.05) == 7.5e-4

    def test_minimum_at_end(self):
        assert lr_schedule(1.0) == 1e-6

    def test_cosine_midpoint(self):
        mid = 0.05 + (1 - 0.05) / 2
        assert lr_schedule(mid) == pytest.approx((7.5e-4 + 1e-6) / 2, rel=1e-12)

    def test_warmup_is_linear_from_zero(self):
        assert lr_schedule(0.0) == 0.0
        assert lr_schedule(0.025) == pytest.approx(7.5e-4 / 2, rel=1e-12)

    def test_no_warmup_variant(self):
        assert lr_schedule(0.0, warmup_frac=0.0) == 7.5e-4
