"""Texture enhancement for single-image super-resolution via high-resolution style transfer."""
from .complexity import CalibrationSample, ComplexityConfig, fit_scale_model, mmi, mmi_delta
from .exceptions import (
    DegenerateFitError,
    HRSTError,
    ImageIOError,
    InvalidArgumentError,
    WeightFormatError,
)
from .image import (
    PatchGrid,
    merge_patches,
    read_image,
    resample_bicubic,
    split_patches,
    to_luma,
    write_image,
)
from .lbfgs import LbfgsOptions, OptimReport, minimize
from .loss import TransferConfig, compute_targets, content_energy, gram, style_energy, total_loss_and_grad
from .metrics import psnr, ssim
from .network import (
    FeatureMaps,
    LayerSpec,
    Network,
    backward,
    forward,
    load_weights,
    random_network,
    save_weights,
    tiny_layers,
    vgg16_layers,
)
from .pipeline import HRSTEnhancer, PipelineConfig, enhance, super_resolve, super_resolve_4k
from .scale import ScaleFactorRegressor, ScaleModel, estimate_phi, quantize_phi
from .style import generate_style

__version__ = "0.1.0"
