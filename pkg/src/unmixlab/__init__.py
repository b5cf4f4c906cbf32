"""Hyperspectral unmixing laboratory.

Synthetic structured datasets (superpixel segmentation + random split +
bilinear mixing), an adversarially trained patch-transformer unmixer,
classical least-squares baselines, and the standard abundance/spectral
evaluation metrics.
"""

from .core import (
    AbundanceSet,
    ConfigError,
    ConstraintError,
    DatasetSplit,
    DimensionError,
    EndmemberMatrix,
    HsiCube,
    NumericsError,
    Patch,
    UnmixError,
    extract_patch,
    iterate_patches,
    mirror_pad,
    split_dataset,
)
from .synth import (
    GbmParams,
    SlicParams,
    SuperpixelLabeling,
    add_gaussian_noise,
    gbm_mix,
    seed_abundance,
    slic_segment,
    split_superpixels,
    synthesize_dataset,
    synthetic_spectra,
)
from .transformer import PatchTransformer, TransformerConfig
from .gan import (
    Discriminator,
    DiscriminatorConfig,
    TrainConfig,
    d_loss,
    g_loss,
    infer_abundance,
    train,
)
from .baselines import AdmmParams, bootstrap_labels, fcls_unmix, sunsal_unmix
from .metrics import EvalReport, armse, asam, evaluate, reconstruct, rms_aad, rmse_per_endmember

__version__ = "0.1.0"

__all__ = [
    "AbundanceSet",
    "AdmmParams",
    "ConfigError",
    "ConstraintError",
    "DatasetSplit",
    "DimensionError",
    "Discriminator",
    "DiscriminatorConfig",
    "EndmemberMatrix",
    "EvalReport",
    "GbmParams",
    "HsiCube",
    "NumericsError",
    "Patch",
    "PatchTransformer",
    "SlicParams",
    "SuperpixelLabeling",
    "TrainConfig",
    "TransformerConfig",
    "UnmixError",
    "add_gaussian_noise",
    "armse",
    "asam",
    "bootstrap_labels",
    "d_loss",
    "evaluate",
    "extract_patch",
    "fcls_unmix",
    "g_loss",
    "gbm_mix",
    "infer_abundance",
    "iterate_patches",
    "mirror_pad",
    "reconstruct",
    "rms_aad",
    "rmse_per_endmember",
    "seed_abundance",
    "slic_segment",
    "split_dataset",
    "split_superpixels",
    "sunsal_unmix",
    "synthesize_dataset",
    "synthetic_spectra",
    "train",
]
