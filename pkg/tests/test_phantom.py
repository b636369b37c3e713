import numpy as np
import numpy.testing as npt
import pytest

from aliasnet import kspace, metrics, phantom
from aliasnet.phantom import (SHEPP_LOGAN_ELLIPSES, DynamicSequence,
                              build_training_set, dynamic_phantom, shepp_logan)


def point_in_ellipse(x, y, e):
    dx, dy = x - e.cx, y - e.cy
    c, s = np.cos(e.angle), np.sin(e.angle)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return (u / e.a) ** 2 + (v / e.b) ** 2 <= 1.0


def test_phantom_left_right_symmetric():
    img = shepp_logan(64)
    assert np.abs(img - img[:, ::-1]).max() < 1e-12


def test_phantom_values_in_unit_interval():
    img = shepp_logan(50)
    assert img.min() >= 0.0 and img.max() <= 1.0


def test_phantom_corners_outside_head():
    img = shepp_logan(32)
    # oracle: the corner coordinates are outside every ellipse
    for x, y in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
        assert not any(point_in_ellipse(x, y, e) for e in SHEPP_LOGAN_ELLIPSES)
    assert img[0, 0] == img[0, -1] == img[-1, 0] == img[-1, -1] == 0.0


def test_phantom_matches_pointwise_oracle():
    n = 24
    img = phantom.render_ellipses(n, SHEPP_LOGAN_ELLIPSES)
    idx = (np.arange(n) - (n - 1) / 2.0) * (2.0 / (n - 1))
    for i in (0, 5, 11, 17, 23):
        for j in (0, 7, 12, 20):
            expected = sum(e.value for e in SHEPP_LOGAN_ELLIPSES
                           if point_in_ellipse(idx[j], -idx[i], e))
            assert img[i, j] == pytest.approx(expected, abs=1e-12)


def test_phantom_rejects_tiny_n():
    with pytest.raises(ValueError):
        shepp_logan(8)


def test_dynamic_zero_amplitude_is_static():
    seq = dynamic_phantom(32, 5, period=4, motion_amp=0.0, seed=2)
    for t in range(1, 5):
        npt.assert_array_equal(seq.frames[t], seq.frames[0])


def test_dynamic_periodicity():
    seq = dynamic_phantom(32, 16, period=8, motion_amp=0.2, seed=3)
    npt.assert_allclose(seq.frames[0], seq.frames[8], atol=1e-9)
    npt.assert_allclose(seq.frames[3], seq.frames[11], atol=1e-9)


def test_dynamic_actually_moves():
    seq = dynamic_phantom(32, 2, period=8, motion_amp=0.2, seed=4)
    assert np.abs(seq.frames[1] - seq.frames[0]).mean() > 0


def test_dynamic_deterministic():
    a = dynamic_phantom(24, 6, period=3, motion_amp=0.1, seed=9)
    b = dynamic_phantom(24, 6, period=3, motion_amp=0.1, seed=9)
    npt.assert_array_equal(a.frames, b.frames)


def test_dynamic_range_and_validation():
    seq = dynamic_phantom(32, 8, period=4, motion_amp=0.3, seed=5)
    assert seq.frames.min() >= 0.0 and seq.frames.max() <= 1.0
    with pytest.raises(ValueError):
        dynamic_phantom(32, 8, motion_amp=0.5)
    with pytest.raises(ValueError):
        dynamic_phantom(32, 0)


def test_training_set_full_mask_noiseless_inputs_equal_targets():
    seq = dynamic_phantom(16, 6, period=3, motion_amp=0.1, seed=6)
    full = kspace.mask_uniform(16, 1)
    ts = build_training_set([seq], full, noise_sigma=0.0, seed=1)
    npt.assert_allclose(ts.inputs, ts.targets, atol=1e-9)


def test_training_set_column_count():
    seqs = [dynamic_phantom(16, 5, period=3, motion_amp=0.1, seed=s) for s in (1, 2)]
    mask = kspace.mask_radial(16, 8)
    ts = build_training_set(seqs, mask, noise_sigma=0.01, seed=2)
    assert ts.inputs.shape == (256, 10)
    assert ts.targets.shape == (256, 10)


def test_training_set_deterministic():
    seq = dynamic_phantom(16, 4, period=2, motion_amp=0.1, seed=3)
    mask = kspace.mask_radial(16, 8)
    a = build_training_set([seq], mask, noise_sigma=0.02, seed=5)
    b = build_training_set([seq], mask, noise_sigma=0.02, seed=5)
    npt.assert_array_equal(a.inputs, b.inputs)
    npt.assert_array_equal(a.targets, b.targets)


def test_training_set_radial_aliasing_is_visible(toy_training_set):
    # sanity oracle: undersampling must actually corrupt the inputs
    ts = toy_training_set
    errs = [metrics.nmse(ts.inputs[:, j], ts.targets[:, j]) for j in range(ts.inputs.shape[1])]
    assert np.mean(errs) > 0.05


def test_training_set_range(toy_training_set):
    assert toy_training_set.inputs.min() >= 0.0
    assert toy_training_set.inputs.max() <= 1.0


def test_training_set_shape_mismatch():
    seq = dynamic_phantom(16, 2, period=2, motion_amp=0.1, seed=1)
    with pytest.raises(ValueError):
        build_training_set([seq], kspace.mask_radial(32, 8))
