import numpy as np
import pytest

from aliasnet import kernels, kspace, phantom


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # trigger any jit compilation before timed assertions run
    kernels.sigmoid(np.zeros(4))
    kernels.soft_threshold(np.zeros(4), 0.1)
    kernels.render_ellipses(np.zeros(2), np.zeros(2), np.full((1, 7), 0.5))
    pad = np.zeros((12, 12))
    kernels.ssim_map(pad, pad, np.full((11, 11), 1.0 / 121.0), 1e-4, 9e-4)


@pytest.fixture(scope="session")
def radial_mask_32():
    return kspace.mask_radial(32, 24)


@pytest.fixture(scope="session")
def toy_training_set(radial_mask_32):
    """Default 32x32 synthetic set: 8 sequences x 64 frames = 512 pairs."""
    seqs = phantom.phantom_suite(32, 8, 64, period=16, motion_amp=0.15, seed=0)
    return phantom.build_training_set(seqs, radial_mask_32, noise_sigma=0.01, seed=0)


@pytest.fixture(scope="session")
def heldout_test_set(radial_mask_32):
    seqs = phantom.phantom_suite(32, 2, 32, period=16, motion_amp=0.15, seed=12345)
    return phantom.build_training_set(seqs, radial_mask_32, noise_sigma=0.01, seed=999)
