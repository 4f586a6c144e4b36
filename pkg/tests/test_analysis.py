import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import RATE, random_signals
from opdkit import (Decomposer, DsaPoint, OaPoint, SweepValidationError,
                    Waveform, compute_metrics, decompose, dsa_sweep,
                    dsa_synthesize, oa_apply, oa_sweep,
                    sar_improvement_condition)
from opdkit.analysis import default_dsa_grid, default_oa_grid


@pytest.fixture
def running_decomposition(running_example):
    s, n, s_hat, _ = running_example
    return decompose(s_hat, s, n, max_delay=1)


class TestPoints:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            DsaPoint(-0.1, 1.0)
        with pytest.raises(ValueError):
            OaPoint(-1.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            DsaPoint(math.nan, 1.0)
        with pytest.raises(ValueError):
            OaPoint(math.inf)


class TestDsaSynthesize:
    def test_unit_point_is_identity(self, running_decomposition, running_example):
        _, _, s_hat, _ = running_example
        out = dsa_synthesize(running_decomposition, DsaPoint(1.0, 1.0))
        assert_allclose(out.samples, s_hat.samples, atol=1e-15)

    def test_artifact_free_point(self, running_decomposition):
        out = dsa_synthesize(running_decomposition, DsaPoint(1.0, 0.0))
        assert_allclose(out.samples, [0.9, 0.2, 0.0, 0.0], atol=1e-14)

    def test_running_example_scaling(self, running_decomposition):
        out = dsa_synthesize(running_decomposition, DsaPoint(0.5, 2.0))
        assert_allclose(out.samples, [0.9, 0.1, 0.2, 0.0], atol=1e-14)


class TestOaApply:
    def test_zero_omega_is_identity(self, running_example):
        _, _, s_hat, y = running_example
        out = oa_apply(s_hat, y, OaPoint(0.0))
        assert_allclose(out.samples, s_hat.samples, rtol=0, atol=0)

    def test_running_example(self, running_example):
        _, _, s_hat, y = running_example
        out = oa_apply(s_hat, y, OaPoint(0.5))
        assert_allclose(out.samples, [1.4, 0.7, 0.1, 0.0], atol=1e-15)

    def test_zero_enhanced_returns_observation(self, running_example):
        _, _, _, y = running_example
        zero = Waveform(np.zeros(4), RATE)
        assert_allclose(oa_apply(zero, y, OaPoint(1.0)).samples, y.samples)


class TestSarGainCondition:
    def test_observation_itself_holds(self, running_example):
        _, _, _, y = running_example
        check = sar_improvement_condition(y, y)
        assert check.holds
        assert check.inner_value == pytest.approx(2.0)

    def test_negated_observation_fails(self, running_example):
        _, _, _, y = running_example
        neg = Waveform(-y.samples, RATE)
        check = sar_improvement_condition(neg, y)
        assert not check.holds
        assert check.inner_value == pytest.approx(-2.0)

    def test_running_example(self, running_example):
        _, _, s_hat, y = running_example
        check = sar_improvement_condition(s_hat, y)
        assert check.holds
        assert check.inner_value == pytest.approx(1.1)


class TestDsaSweep:
    def test_unit_grid_point_matches_baseline(self, running_decomposition):
        baseline = compute_metrics(running_decomposition)
        result = dsa_sweep(running_decomposition, [DsaPoint(1.0, 1.0)], "u0")
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.utterance_id == "u0"
        assert row.omega_obs is None
        assert row.metrics.sar_db == pytest.approx(baseline.sar_db, abs=1e-12)
        assert row.metrics.snr_db == pytest.approx(baseline.snr_db, abs=1e-12)

    def test_empty_grid_rejected(self, running_decomposition):
        with pytest.raises(ValueError, match="non-empty"):
            dsa_sweep(running_decomposition, [])

    def test_duplicate_grid_rejected(self, running_decomposition):
        with pytest.raises(ValueError, match="unique"):
            dsa_sweep(running_decomposition,
                      [DsaPoint(1.0, 1.0), DsaPoint(1.0, 1.0)])

    def test_snr_shift_law(self, running_decomposition):
        baseline = compute_metrics(running_decomposition)
        for omega_noise in (0.25, 0.5, 2.0):
            result = dsa_sweep(running_decomposition, [DsaPoint(omega_noise, 1.0)])
            expected = baseline.snr_db - 20.0 * math.log10(omega_noise)
            assert result.rows[0].metrics.snr_db == pytest.approx(expected, abs=1e-9)

    def test_default_grid_shape(self):
        grid = default_dsa_grid()
        assert len(grid) == 49
        assert grid[0] == DsaPoint(0.0, 0.0)
        assert grid[-1] == DsaPoint(1.5, 1.5)


class TestOaSweep:
    def test_zero_point_matches_baseline(self, running_example):
        s, n, s_hat, y = running_example
        baseline = compute_metrics(decompose(s_hat, s, n, max_delay=1))
        result = oa_sweep(s_hat, y, s, n, 1, [OaPoint(0.0)], "u0")
        row = result.rows[0]
        assert row.sari_closed_form_db == 0.0
        assert row.metrics.sar_db == pytest.approx(baseline.sar_db, abs=1e-12)
        assert row.inner_s_hat_y == pytest.approx(1.1)

    def test_sar_increases_when_condition_holds(self, running_example):
        s, n, s_hat, y = running_example
        result = oa_sweep(s_hat, y, s, n, 1,
                          [OaPoint(0.0), OaPoint(0.5), OaPoint(1.0)])
        sars = [row.metrics.sar_db for row in result.rows]
        assert sars[0] < sars[1] < sars[2]

    def test_shared_decomposer_gives_same_rows(self, running_example):
        s, n, s_hat, y = running_example
        dec = Decomposer(s, n, max_delay=1)
        grid = [OaPoint(0.0), OaPoint(0.7)]
        a = oa_sweep(s_hat, y, s, n, 1, grid)
        b = oa_sweep(s_hat, y, s, n, 1, grid, decomposer=dec)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.metrics.sar_db == rb.metrics.sar_db

    def test_inconsistent_observation_fails_loudly(self, running_example):
        # y must equal s + n; smuggling in an out-of-span component breaks
        # the closed-form/re-decomposition agreement and must raise
        s, n, s_hat, _ = running_example
        bad_y = Waveform([1.0, 1.0, 0.5, 0.0], RATE)
        with pytest.raises(SweepValidationError, match="disagrees"):
            oa_sweep(s_hat, bad_y, s, n, 1, [OaPoint(1.0)])

    def test_default_grid(self):
        grid = default_oa_grid()
        assert len(grid) == 16
        assert grid[0].omega_obs == 0.0
        assert grid[-1].omega_obs == 1.5


@pytest.mark.parametrize("seed", range(3))
def test_oa_artifact_invariance_random(seed):
    s, n, s_hat = random_signals(seed, length=500, max_delay=8)
    y = Waveform(s.samples + n.samples, RATE)
    dec = Decomposer(s, n, max_delay=8)
    d = dec.decompose(s_hat)
    for omega in (0.3, 1.0, 1.5):
        d_bar = dec.decompose(oa_apply(s_hat, y, OaPoint(omega)))
        rel = (np.linalg.norm(d_bar.e_artif.samples - d.e_artif.samples)
               / np.linalg.norm(d.e_artif.samples))
        assert rel <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_dsa_end_to_end_linearity_random(seed):
    s, n, s_hat = random_signals(seed, length=500, max_delay=8)
    dec = Decomposer(s, n, max_delay=8)
    d = dec.decompose(s_hat)
    point = DsaPoint(0.5, 2.0)
    d2 = dec.decompose(dsa_synthesize(d, point))
    ref = np.linalg.norm(s_hat.samples)
    assert np.linalg.norm(d2.s_target.samples - d.s_target.samples) <= 1e-8 * ref
    assert np.linalg.norm(d2.e_noise.samples - 0.5 * d.e_noise.samples) <= 1e-8 * ref
    assert np.linalg.norm(d2.e_artif.samples - 2.0 * d.e_artif.samples) <= 1e-8 * ref
