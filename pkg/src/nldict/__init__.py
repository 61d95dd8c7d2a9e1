"""Undecimated lattice filter-bank dictionaries with learnable
nonlinearities, trained by backpropagation and used inside ISTA for image
denoising."""

from .dictionary import (
    CnldParams,
    ParamGradient,
    backward,
    forward,
    inverse,
    pack,
    parameter_count,
    prelu,
    prelu_subgrad,
    unpack,
)
from .image import (
    NoiseSpec,
    PgmFormatError,
    add_awgn,
    extract_patches,
    load_pgm,
    psnr,
    save_pgm,
)
from .lattice import (
    FilterPair,
    filter_gradients,
    lattice_to_filters,
    synthesis_filters,
)
from .sparse import (
    DivergenceError,
    IstaConfig,
    hard_threshold_topk,
    iht,
    ista,
    soft_threshold,
)
from .train import TrainConfig, TrainReport, init_udht, param_hash, train
from .transform import (
    CacheMismatchError,
    analyze,
    analyze_vjp,
    num_channels,
    synthesize,
    synthesize_vjp,
)

__version__ = "0.1.0"
