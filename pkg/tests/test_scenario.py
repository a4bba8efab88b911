import numpy as np
import pytest

from eeisac.scenario import (ChannelSet, SystemConfig, dbm_to_watt,
                             db_to_linear, default_config, draw_channels,
                             make_config, watt_to_dbm)


def test_dbm_30_is_one_watt():
    assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-14)


def test_p0_33dbm_value():
    cfg = default_config()
    assert cfg.P0 == pytest.approx(1.9952623149688795, rel=1e-12)


def test_unit_round_trip():
    for p in (1e-6, 0.002, 1.0, 17.3, 500.0):
        assert watt_to_dbm(dbm_to_watt(watt_to_dbm(p))) == pytest.approx(
            watt_to_dbm(p), rel=1e-12)


def test_make_config_parses_strings():
    cfg = make_config({
        "M": 4, "N_rx": 8, "L": 10, "K": 2, "eps_pa": 0.5,
        "P0": "33 dBm", "Pmax": "30 dBm", "sigma_c2": "10 dBm",
        "sigma_s2": 1.0, "gamma": "10 dB", "rho": "0.15 deg", "rng_seed": 3,
    })
    assert cfg.Pmax == pytest.approx(1.0)
    assert cfg.sigma_c2 == pytest.approx(0.01)
    assert cfg.gamma == (pytest.approx(10.0),) * 2
    assert cfg.rho == pytest.approx(np.deg2rad(0.15))


def test_missing_key_rejected():
    with pytest.raises(KeyError, match="Pmax"):
        make_config({"M": 4, "N_rx": 8, "L": 10, "K": 2, "eps_pa": 0.5,
                     "P0": 1.0, "sigma_c2": 0.01, "sigma_s2": 1.0,
                     "gamma": 10, "rho": 0.01})


def test_k_exceeds_m_rejected():
    with pytest.raises(ValueError, match="K exceeds M"):
        default_config(M=2, K=3, gamma=[10, 10, 10])


def test_nonpositive_power_rejected():
    with pytest.raises(ValueError):
        default_config(Pmax=0.0)


def test_per_user_gamma_list():
    cfg = default_config(K=2, gamma=["10 dB", 2.5])
    assert cfg.gamma == (pytest.approx(10.0), pytest.approx(2.5))


def test_db_to_linear():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(0.0) == pytest.approx(1.0)


def test_draw_deterministic():
    cfg = default_config(rng_seed=11)
    c1 = draw_channels(cfg)
    c2 = draw_channels(cfg)
    np.testing.assert_array_equal(c1.h, c2.h)


def test_seed_changes_channels():
    a = draw_channels(default_config(rng_seed=1))
    b = draw_channels(default_config(rng_seed=2))
    assert np.max(np.abs(a.h - b.h)) > 1e-3


def test_channel_shape():
    cfg = default_config(M=4, K=2)
    ch = draw_channels(cfg)
    assert ch.h.shape == (2, 4)


def test_channel_unit_variance():
    # sample mean power per entry over 1e5 draws
    cfg = default_config(M=10, K=10, gamma=10.0, rng_seed=123)
    n_draws = 1000  # 1000 draws x 100 entries = 1e5 samples
    acc = 0.0
    for i in range(n_draws):
        ch = draw_channels(cfg.with_(rng_seed=1000 + i))
        acc += float(np.mean(np.abs(ch.h) ** 2))
    mean_power = acc / n_draws
    assert 0.98 <= mean_power <= 1.02


def test_channelset_rejects_nonfinite():
    with pytest.raises(ValueError):
        ChannelSet(h=np.array([[np.inf + 0j]]), theta=1.0, alpha=1.0)


def test_config_immutable():
    cfg = default_config()
    with pytest.raises(Exception):
        cfg.M = 12
