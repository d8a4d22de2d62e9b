import math

import numpy as np
import pytest

from wptlf.channel import (EVALUATION_STREAM, PL_EXPONENT, TRAINING_STREAM, ChannelConfig,
                           draw_channel, draw_sample, large_scale_gain, path_loss_db, rng_for,
                           tap_profile, tone_offsets_hz)
from wptlf.errors import ParameterError
from wptlf.model import SystemDims


def test_path_loss_calibration_points():
    assert path_loss_db(10) == pytest.approx(60.046, abs=1e-9)
    assert path_loss_db(25) == pytest.approx(69.4584, abs=1e-9)
    assert PL_EXPONENT == pytest.approx(9.4124 / (10 * math.log10(2.5)), rel=1e-12)
    assert PL_EXPONENT == pytest.approx(2.36528, abs=1e-5)
    assert path_loss_db(30) > path_loss_db(20) > path_loss_db(5)
    with pytest.raises(ParameterError):
        path_loss_db(0)


def test_path_loss_uses_config():
    cfg = ChannelConfig(SystemDims(1, 1), pathloss_ref_db=40.0, pathloss_exponent=2.0)
    assert path_loss_db(100, cfg) == pytest.approx(60.0)
    assert large_scale_gain(ChannelConfig(SystemDims(1, 1))) == pytest.approx(10 ** -6.0046)


def test_config_validation():
    dims = SystemDims(1, 2)
    for bad in [dict(bandwidth_hz=0), dict(tap_count=0), dict(delay_spread_s=0), dict(distance_m=-1)]:
        with pytest.raises(ParameterError):
            ChannelConfig(dims, **bad)


def test_tap_profile_and_tones():
    cfg = ChannelConfig(SystemDims(1, 4))
    delays, powers = tap_profile(cfg)
    assert powers.sum() == pytest.approx(1.0)
    assert np.all(np.diff(powers) < 0) and delays[0] == 0
    np.testing.assert_allclose(tone_offsets_hz(cfg), [-3.75e6, -1.25e6, 1.25e6, 3.75e6])


def test_single_tap_is_flat():
    cfg = ChannelConfig(SystemDims(2, 8, 2), tap_count=1)
    H = draw_channel(cfg, rng_for(3, 0, 0)).reshape(8, 2, 2)
    assert np.all(H == H[:1])


def test_determinism_and_seed_dependence():
    cfg = ChannelConfig(SystemDims(2, 4, 2), seed=11)
    a = draw_sample(cfg, 3).realizations
    b = draw_sample(cfg, 3).realizations
    np.testing.assert_array_equal(a, b)
    other = draw_sample(ChannelConfig(SystemDims(2, 4, 2), seed=12), 1).realizations
    assert not np.array_equal(a[0], other[0])
    evaluation = draw_sample(cfg, 3, stream=EVALUATION_STREAM).realizations
    assert not np.any(np.isin(a, evaluation))


def test_prefix_stability_and_offsets():
    cfg = ChannelConfig(SystemDims(1, 8), seed=5)
    long = draw_sample(cfg, 20).realizations
    np.testing.assert_array_equal(draw_sample(cfg, 10).realizations, long[:10])
    np.testing.assert_array_equal(draw_sample(cfg, 5, start=10).realizations, long[10:15])


def test_sample_metadata_and_errors():
    cfg = ChannelConfig(SystemDims(1, 2))
    s = draw_sample(cfg, 1)
    assert len(s) == 1 and s[0].shape == (2, 1)
    assert "Philox" in s.metadata["rng"] and s.stream == TRAINING_STREAM
    with pytest.raises(ParameterError):
        draw_sample(cfg, 0)


def test_per_tone_power_matches_large_scale_gain():
    cfg = ChannelConfig(SystemDims(1, 1), seed=2)
    H = draw_sample(cfg, 10_000).realizations
    ratio = np.mean(np.abs(H) ** 2) / large_scale_gain(cfg)
    assert abs(ratio - 1) < 0.05


def test_selectivity_grows_with_bandwidth():
    """Adjacent-tone correlation is high at 1 MHz and clearly lower at 10 MHz."""
    def adjacent_corr(bw):
        cfg = ChannelConfig(SystemDims(1, 8), bandwidth_hz=bw, seed=9)
        H = draw_sample(cfg, 2000).realizations[:, :, 0]
        num = np.mean(H[:, 1:] * H[:, :-1].conj())
        return abs(num) / np.mean(np.abs(H) ** 2)

    narrow, wide = adjacent_corr(1e6), adjacent_corr(10e6)
    assert narrow > 0.97
    assert wide < 0.85
    # band-edge tones at 10 MHz decorrelate much further
    cfg = ChannelConfig(SystemDims(1, 8), seed=9)
    H = draw_sample(cfg, 2000).realizations[:, :, 0]
    edge = abs(np.mean(H[:, -1] * H[:, 0].conj())) / np.mean(np.abs(H) ** 2)
    assert edge < 0.4


def test_config_round_trip():
    cfg = ChannelConfig(SystemDims(2, 3, 1), distance_m=25.0, seed=7)
    assert ChannelConfig.from_dict(cfg.to_dict()) == cfg
