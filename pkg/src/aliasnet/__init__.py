"""Undersampled dynamic-MRI simulation, autoencoder-based real-time
reconstruction, and benchmarking against classical online baselines."""

from . import baselines, kernels, kspace, metrics, phantom, sdae, tensorio
from .baselines import IstaConfig, differential_cs, online_reconstruct, soft_threshold
from .kspace import (SamplingMask, acquire, dft2, idft2, mask_radial,
                     mask_uniform, mask_variable_density, zero_filled)
from .metrics import benchmark_latency, nmse, ssim
from .phantom import build_training_set, dynamic_phantom, phantom_suite, shepp_logan
from .sdae import (SdaeModel, TrainConfig, architecture_dims, load_model,
                   reconstruct, save_model, stack_train, train_layer)

__version__ = "0.1.0"
