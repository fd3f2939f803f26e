"""End-to-end texture enhancement: scale selection, style synthesis, fusion."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import os
import time
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image
from .complexity import ComplexityConfig, mmi_delta
from .exceptions import InvalidArgumentError
from .image import merge_patches, resample_bicubic, split_patches
from .lbfgs import LbfgsOptions, minimize
from .loss import TransferConfig, compute_targets, total_loss_and_grad
from .network import load_weights, tiny_layers, vgg16_layers
from .scale import ScaleModel, estimate_phi, quantize_phi
from .style import generate_style

log = logging.getLogger(__name__)

THREADS_ENV = "HRST_THREADS"


def default_thread_count():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PipelineConfig:
    upsample_factor: int = 4
    scale_model: ScaleModel = field(default_factory=ScaleModel)
    transfer: TransferConfig = field(default_factory=TransferConfig)
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)
    patch_mode: bool = False
    patch_size: int = 240
    overlap: float = 0.3
    thread_count: Optional[int] = None
    phi_override: Optional[float] = None
    lbfgs: LbfgsOptions = field(default_factory=LbfgsOptions)

    def __post_init__(self):
        if int(self.upsample_factor) < 2:
            raise InvalidArgumentError("upsample_factor must be >= 2")
        if self.phi_override is not None and not 0.0 < self.phi_override < 1.0:
            raise InvalidArgumentError("phi_override must lie in (0, 1)")

    @property
    def optimizer_options(self):
        return replace(self.lbfgs, max_iterations=int(self.transfer.iterations))

    @property
    def threads(self):
        return self.thread_count if self.thread_count else default_thread_count()


@dataclass
class Diagnostics:
    delta: float
    phi: float
    phi_hat: float
    loss_trace: list
    termination_reason: str
    iterations: int
    seconds: float
    style: np.ndarray = field(default=None, repr=False)


def enhance(initial_hr, interp, net, cfg=None):
    """Fuse a mirror-tiled style image into ``initial_hr``.

    ``interp`` is the bicubic-interpolated LR image at the same size; the
    MMI gain between the two picks the style down-scaling factor.
    """
    cfg = cfg or PipelineConfig()
    t0 = time.perf_counter()
    c = check_image(initial_hr, name="initial_hr")
    delta = mmi_delta(interp, c, cfg.complexity)
    phi = estimate_phi(delta, cfg.scale_model)
    phi_hat = cfg.phi_override if cfg.phi_override is not None else quantize_phi(phi, cfg.scale_model)
    style = generate_style(c, phi_hat)
    targets = compute_targets(net, style, c, cfg.transfer)

    def objective(flat):
        loss, grad = total_loss_and_grad(
            net, flat.reshape(c.shape), targets.style_grams, targets.content_feats, cfg.transfer
        )
        return loss, grad.ravel()

    x, report = minimize(objective, c.ravel(), cfg.optimizer_options)
    out = np.clip(x.reshape(c.shape), 0.0, 1.0)
    diag = Diagnostics(
        delta, phi, phi_hat, report.loss_trace, report.termination_reason,
        report.iterations_used, time.perf_counter() - t0, style,
    )
    log.debug("delta=%.5f phi=%.4f phi_hat=%.3f iterations=%d reason=%s",
              delta, phi, phi_hat, report.iterations_used, report.termination_reason)
    return out, diag


def interpolate(lr, factor):
    lr = check_image(lr, name="lr")
    _, h, w = lr.shape
    return resample_bicubic(lr, w * factor, h * factor)


def super_resolve(lr, net, initial_hr=None, cfg=None):
    """Upscale ``lr`` and enhance its texture.

    ``initial_hr`` is the output of any external SR method at ``factor``
    times the LR size; without it the bicubic upscale is used.
    Returns ``(hr, diagnostics)``; in patch mode diagnostics is a list
    with one entry per patch.
    """
    cfg = cfg or PipelineConfig()
    interp = interpolate(lr, int(cfg.upsample_factor))
    if initial_hr is None:
        log.warning("no initial HR image given; falling back to bicubic interpolation")
        c = interp
    else:
        c = check_image(initial_hr, name="initial_hr")
        if c.shape[1:] != interp.shape[1:]:
            raise InvalidArgumentError(
                f"initial HR is {c.shape[2]}x{c.shape[1]}, expected "
                f"{interp.shape[2]}x{interp.shape[1]} for factor {cfg.upsample_factor}"
            )
        if c.shape[0] != interp.shape[0]:
            raise InvalidArgumentError("initial HR and LR images differ in channel count")
    if cfg.patch_mode:
        return super_resolve_4k(c, net, cfg, interp=interp)
    return enhance(c, interp, net, cfg)


def super_resolve_4k(img, net, cfg=None, interp=None):
    """Enhance a large image patch by patch and blend the results.

    Each overlapping patch gets its own scale factor. Without ``interp``
    a stand-in is simulated by bicubic down- and up-scaling ``img`` by
    the configured factor. Returns ``(image, [diagnostics per patch])``.
    """
    cfg = cfg or PipelineConfig()
    img = check_image(img)
    _, h, w = img.shape
    if interp is None:
        f = int(cfg.upsample_factor)
        small = resample_bicubic(img, max(1, round(w / f)), max(1, round(h / f)))
        interp = resample_bicubic(small, w, h)
    if min(h, w) < cfg.patch_size:
        out, diag = enhance(img, interp, net, cfg)
        return out, [diag]

    grid = split_patches(img, cfg.patch_size, cfg.overlap)
    igrid = split_patches(interp, cfg.patch_size, cfg.overlap)

    def work(k):
        ox, oy, patch = grid.patches[k]
        return enhance(patch, igrid.patches[k][2], net, cfg)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(work, range(len(grid.patches))))
    grid.patches = [(ox, oy, out) for (ox, oy, _), (out, _) in zip(grid.patches, results)]
    return np.clip(merge_patches(grid), 0.0, 1.0), [d for _, d in results]


ARCHITECTURES = {"vgg16": vgg16_layers, "tiny": tiny_layers}


class HRSTEnhancer(TransformerMixin, BaseEstimator):
    """Texture-enhancing super-resolution as a scikit-learn transformer.

    ``fit`` only loads and validates the feature network (from
    ``network`` if given, else from the ``weights`` file); ``transform``
    maps a low-resolution (C, H, W) image to its enhanced upscale.
    Per-call diagnostics are kept in ``diagnostics_``.
    """

    def __init__(self, weights=None, network=None, arch="vgg16", pooling="max", factor=4,
                 alpha=1e4, beta=1.0, iterations=300, style_layers=(1, 3, 5, 8, 11),
                 content_layers=(7, 10, 13), slope=-4.626, intercept=0.792, num_bins=16,
                 phi=None, patch_mode=False, patch_size=240, overlap=0.3, n_jobs=None):
        self.weights = weights
        self.network = network
        self.arch = arch
        self.pooling = pooling
        self.factor = factor
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.style_layers = style_layers
        self.content_layers = content_layers
        self.slope = slope
        self.intercept = intercept
        self.num_bins = num_bins
        self.phi = phi
        self.patch_mode = patch_mode
        self.patch_size = patch_size
        self.overlap = overlap
        self.n_jobs = n_jobs

    def _make_config(self):
        return PipelineConfig(
            upsample_factor=self.factor,
            scale_model=ScaleModel(slope=self.slope, intercept=self.intercept),
            transfer=TransferConfig(
                style_layers=tuple(self.style_layers),
                content_layers=tuple(self.content_layers),
                alpha=self.alpha, beta=self.beta, iterations=self.iterations,
            ),
            complexity=ComplexityConfig(self.num_bins),
            patch_mode=self.patch_mode, patch_size=self.patch_size, overlap=self.overlap,
            thread_count=self.n_jobs, phi_override=self.phi,
        )

    def fit(self, X=None, y=None):
        if self.network is not None:
            net = self.network
        elif self.weights is not None:
            if self.arch not in ARCHITECTURES:
                raise InvalidArgumentError(f"unknown arch {self.arch!r}")
            net = load_weights(self.weights, ARCHITECTURES[self.arch](), self.pooling)
        else:
            raise InvalidArgumentError("either weights or network must be given")
        cfg = self._make_config()
        missing = cfg.transfer.capture - set(net.conv_indices)
        if missing:
            raise InvalidArgumentError(f"layers {sorted(missing)} are not in the network")
        self.network_ = net
        self.config_ = cfg
        return self

    def transform(self, X, initial_hr=None):
        check_is_fitted(self, "network_")
        out, self.diagnostics_ = super_resolve(X, self.network_, initial_hr, self.config_)
        return out
