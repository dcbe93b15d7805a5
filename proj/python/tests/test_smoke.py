import json

import numpy as np
import pytest

import fdlink


def test_code_rates():
    assert fdlink.code_rates() == ["1/4", "1/3", "1/2", "2/3"]


@pytest.mark.parametrize("rate", ["1/4", "1/3", "1/2", "2/3"])
def test_noiseless_round_trip(rate):
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 600, dtype=np.uint8)
    coded = fdlink.conv_encode(bits, rate)
    soft = 1.0 - 2.0 * coded.astype(float)
    np.testing.assert_array_equal(fdlink.viterbi_decode(soft, rate), bits)


def test_unknown_rate_raises():
    with pytest.raises(ValueError):
        fdlink.conv_encode(np.zeros(4, dtype=np.uint8), "3/4")


def test_rrc_unit_energy_and_nyquist():
    h = fdlink.design_rrc(0.25, 16, 4)
    assert abs(np.sum(h**2) - 1.0) < 1e-9
    g = np.convolve(h, h)
    mid = len(g) // 2
    for k in range(1, 16):
        assert abs(g[mid + 4 * k]) < 1e-6


def test_presets_round_trip():
    assert set(fdlink.presets()) >= {"site1", "site2"}
    cfg = fdlink.preset("site2")
    assert cfg["mode"] == "fd"
    assert json.loads(json.dumps(cfg)) == cfg


def test_small_run_is_deterministic():
    cfg = fdlink.preset("site2")
    cfg.update(desk_scale=0.05, snr_db=[6.0], seeds=[1, 2])
    cfg["receiver"]["iterations"] = 1
    rows, skipped = fdlink.run(cfg)
    assert skipped == []
    assert len(rows) == 2
    assert [r["seed"] for r in rows] == [1, 2]
    for r in rows:
        assert 0.0 <= r["ber"] <= 0.5
        assert r["bits_counted"] > 0
        assert r["sic_depth_db"] is not None
    again, _ = fdlink.run(json.dumps(cfg))
    assert again == rows
    csv = fdlink.results_csv(json.dumps(cfg))
    assert csv.splitlines()[0].startswith("mode,")
    assert len(csv.splitlines()) == 3


def test_bad_config_raises():
    cfg = fdlink.preset("site2")
    cfg["seeds"] = []
    with pytest.raises(ValueError):
        fdlink.run(cfg)
