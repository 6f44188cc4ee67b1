import math

import numpy as np
import pytest

import postmimic as pm


def rng_image(seed, shape=(24, 24)):
    return np.random.default_rng(seed).uniform(0.0, 1.0, shape)


def test_metrics_match_numpy():
    x, y = rng_image(1), rng_image(2)
    assert pm.mse(x, y) == pytest.approx(np.mean((x - y) ** 2), abs=1e-12)
    assert pm.mae(x, y) == pytest.approx(np.mean(np.abs(x - y)), abs=1e-12)
    assert pm.psnr(x, y) == pytest.approx(10 * math.log10(1 / np.mean((x - y) ** 2)), abs=1e-9)


def test_ssim_identity_and_constant_pair():
    x = rng_image(3)
    assert pm.ssim(x, x)["ssim"] == pytest.approx(1.0, abs=1e-9)
    r = pm.ssim(np.full((16, 16), 0.5), np.full((16, 16), 0.25))
    expected = (2 * 0.125 + 1e-4) / (0.3125 + 1e-4)
    assert r["ssim"] == pytest.approx(expected, abs=1e-12)
    assert r["cs"] == pytest.approx(1.0, abs=1e-12)


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        pm.mse(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        pm.ssim(np.zeros(9), np.zeros(9))


def test_phantom_and_oracle_ranges():
    frames = pm.synth_cineloop({"extent": [32, 32], "frame_count": 3, "seed": 4})
    assert len(frames) == 3
    assert frames[0].shape == (32, 32)
    assert frames[0].max() <= 0.0
    out = pm.oracle_postprocess(frames[0])
    assert out.shape == (32, 32)
    assert out.min() >= 0.0 and out.max() <= 1.0
    again = pm.synth_cineloop({"extent": [32, 32], "frame_count": 3, "seed": 4})
    assert np.array_equal(frames[1], again[1])


def test_preset_generator_keeps_shape():
    m = pm.preset("small", seed=1)
    assert m.kind == "unet"
    assert m.parameter_count == 49409
    h = m.parameter_hash
    y = m.run_frame(rng_image(5, (50, 37)))
    assert y.shape == (50, 37)
    assert y.min() >= 0.0 and y.max() <= 1.0
    assert m.parameter_hash == h
    assert m.flops(128, 128) == 4 * m.flops(64, 64)


def test_benchmark_fields():
    r = pm.benchmark(pm.preset("identity"), 32, 32, repetitions=10)
    assert r["repetitions"] == 10
    assert r["fps"] > 0
    with pytest.raises(ValueError):
        pm.benchmark(pm.preset("identity"), 32, 32, repetitions=9)
