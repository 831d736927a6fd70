import math

import numpy as np
import pytest

from sfslab.afc import AfcComb, fid_time, sr_single_peak_time
from sfslab.errors import DomainError


class TestComb:
    def test_derived(self):
        c = AfcComb(delta=2e6, gamma_peak=2e5, alpha_l=3.0)
        assert c.finesse == pytest.approx(10.0)
        assert c.t_recall == pytest.approx(5e-7)
        assert c.t_single == pytest.approx(1 / (math.pi * 2e5))

    @pytest.mark.parametrize("delta, gamma, a", [(1.0, 1.0, 1.0), (1.0, 2.0, 1.0), (1.0, 0.0, 1.0),
                                                 (2.0, 1.0, -0.1)])
    def test_invalid(self, delta, gamma, a):
        with pytest.raises(DomainError):
            AfcComb(delta, gamma, a)


class TestSingleEmission:
    def test_reference_point(self):
        r = sr_single_peak_time(AfcComb.from_finesse(10.0, 40.0))
        assert r.ratio_to_recall == pytest.approx(0.12, abs=0.01)
        assert r.x_in_regime and r.sr_loss_flagged

    def test_vanishing_depth(self):
        r = sr_single_peak_time(AfcComb.from_finesse(10.0, 0.0))
        assert r.ratio_to_recall == pytest.approx(10 / (2 * math.pi), rel=1e-15)
        assert not r.sr_loss_flagged
        tiny = sr_single_peak_time(AfcComb.from_finesse(10.0, 1e-12))
        assert tiny.ratio_to_recall == pytest.approx(10 / (2 * math.pi), rel=1e-5)

    def test_direct_evaluation_outside_regime(self):
        r = sr_single_peak_time(AfcComb.from_finesse(10.0, 2.0))
        expected = 10 / (math.pi * (2 + 1 * (1 + 2 / math.sqrt(2 * math.pi))))
        assert r.ratio_to_recall == pytest.approx(expected, rel=1e-14)
        assert not r.x_in_regime

    def test_pure_dephasing_limit(self):
        # without the collective term the single-peak time is half the dephasing time
        c = AfcComb(delta=3e6, gamma_peak=1.5e5, alpha_l=0.0)
        r = sr_single_peak_time(c)
        assert r.t_single_sr == pytest.approx(fid_time(c.gamma_peak) / 2, rel=1e-14)

    def test_monotonicity_grid(self):
        F = np.linspace(2, 50, 25)
        A = np.linspace(1, 100, 25)
        R = np.array([[sr_single_peak_time(AfcComb.from_finesse(f, a)).ratio_to_recall for a in A]
                      for f in F])
        assert np.all(np.diff(R, axis=0) > 0)
        assert np.all(np.diff(R, axis=1) < 0)

    def test_flag_definition(self):
        for f in np.linspace(1.5, 60, 40):
            for a in (0.0, 1.0, 10.0, 40.0, 200.0):
                r = sr_single_peak_time(AfcComb.from_finesse(f, a))
                assert r.sr_loss_flagged == (r.ratio_to_recall < 1)
                assert r.t_single_sr > 0

    def test_linear_in_finesse(self):
        r = [sr_single_peak_time(AfcComb.from_finesse(f, 40.0)).ratio_to_recall for f in (2, 4, 8)]
        assert r[1] == pytest.approx(2 * r[0], rel=1e-14)
        assert r[2] == pytest.approx(4 * r[0], rel=1e-14)


class TestFid:
    def test_unit(self):
        assert fid_time(1 / math.pi) == pytest.approx(1.0, rel=1e-15)

    def test_scaling(self):
        assert fid_time(2e5) == pytest.approx(fid_time(1e5) / 2, rel=1e-15)

    def test_narrow_interval_width(self):
        assert fid_time(120e3) == pytest.approx(2.65e-6, abs=0.01e-6)

    def test_invalid(self):
        with pytest.raises(DomainError):
            fid_time(0.0)
