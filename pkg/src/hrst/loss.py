"""Gram-matrix style energy, feature content energy and the combined objective."""
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_image
from .exceptions import InvalidArgumentError
from .network import FeatureMaps, forward, forward_backward


@dataclass(frozen=True)
class TransferConfig:
    style_layers: tuple = (1, 3, 5, 8, 11)
    content_layers: tuple = (7, 10, 13)
    style_weights: tuple = None
    content_weights: tuple = None
    alpha: float = 1e4
    beta: float = 1.0
    iterations: int = 300

    def __post_init__(self):
        for name in ("style", "content"):
            layers = tuple(int(l) for l in getattr(self, f"{name}_layers"))
            if not layers:
                raise InvalidArgumentError(f"{name}_layers must not be empty")
            weights = getattr(self, f"{name}_weights")
            if weights is None:
                weights = (1.0 / len(layers),) * len(layers)
            weights = tuple(float(w) for w in weights)
            if len(weights) != len(layers):
                raise InvalidArgumentError(f"{name}_weights must have one entry per layer")
            if any(w < 0 for w in weights):
                raise InvalidArgumentError(f"{name}_weights must be nonnegative")
            object.__setattr__(self, f"{name}_layers", layers)
            object.__setattr__(self, f"{name}_weights", weights)
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta == 0:
            raise InvalidArgumentError("alpha and beta must be nonnegative and not both zero")
        if int(self.iterations) < 0:
            raise InvalidArgumentError("iterations must be nonnegative")

    @property
    def capture(self):
        return set(self.style_layers) | set(self.content_layers)


def _matrix(feats):
    if isinstance(feats, FeatureMaps):
        return feats.data
    arr = np.asarray(feats, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis]
    return arr


def gram(feats):
    """Unnormalized Gram matrix F @ F.T of a (C, N) feature matrix."""
    f = _matrix(feats)
    return f @ f.T


def style_energy(feats_x, gram_s):
    """Squared Gram mismatch scaled by 1/(4 C^2 N^2), and its gradient in F."""
    f = _matrix(feats_x)
    gs = np.asarray(gram_s, dtype=np.float64)
    c, n = f.shape
    if gs.shape != (c, c):
        raise InvalidArgumentError(f"target Gram is {gs.shape}, features have {c} channels")
    diff = f @ f.T - gs
    norm = float(c * c) * float(n * n)
    energy = float(np.sum(diff * diff)) / (4.0 * norm)
    return energy, (diff @ f) / norm


def content_energy(feats_x, feats_c):
    """Half squared feature distance, and its gradient in F_x."""
    fx = _matrix(feats_x)
    fc = _matrix(feats_c)
    if fx.shape != fc.shape:
        raise InvalidArgumentError(f"feature shapes differ: {fx.shape} vs {fc.shape}")
    diff = fx - fc
    return 0.5 * float(np.sum(diff * diff)), diff


def _to_net_input(net, img):
    """Replicate a single plane across the network's input channels."""
    img = check_image(img)
    if img.shape[0] == 1 and net.in_channels > 1:
        return np.repeat(img, net.in_channels, axis=0), True
    return img, False


@dataclass
class TransferTargets:
    """Fixed Gram targets of the style image and features of the content image."""

    style_grams: dict = field(default_factory=dict)
    content_feats: dict = field(default_factory=dict)


def compute_targets(net, style_img, content_img, cfg=None):
    cfg = cfg or TransferConfig()
    s, _ = _to_net_input(net, style_img)
    c, _ = _to_net_input(net, content_img)
    sf = forward(net, s, cfg.style_layers)
    cf = forward(net, c, cfg.content_layers)
    return TransferTargets(
        {l: gram(sf[l]) for l in cfg.style_layers},
        {l: cf[l].data.copy() for l in cfg.content_layers},
    )


def total_loss_and_grad(net, x, style_grams, content_feats, cfg=None):
    """Weighted style + content loss of image ``x`` and its pixel gradient.

    Uses one forward pass over the union of style and content layers and
    one reverse pass.
    """
    cfg = cfg or TransferConfig()
    if set(style_grams) != set(cfg.style_layers):
        raise InvalidArgumentError(
            f"style targets cover {sorted(style_grams)}, config wants {list(cfg.style_layers)}"
        )
    if set(content_feats) != set(cfg.content_layers):
        raise InvalidArgumentError(
            f"content targets cover {sorted(content_feats)}, config wants {list(cfg.content_layers)}"
        )
    xin, expanded = _to_net_input(net, x)

    def cotangents(feats):
        loss = 0.0
        cot = {}
        for l, w in zip(cfg.style_layers, cfg.style_weights):
            e, g = style_energy(feats[l], style_grams[l])
            loss += cfg.alpha * w * e
            cot[l] = cfg.alpha * w * g
        for l, w in zip(cfg.content_layers, cfg.content_weights):
            target = np.asarray(content_feats[l])
            if target.shape != feats[l].data.shape:
                raise InvalidArgumentError(
                    f"conv{l} content target {target.shape} does not match {feats[l].data.shape}"
                )
            e, g = content_energy(feats[l], target)
            loss += cfg.beta * w * e
            cot[l] = cot[l] + cfg.beta * w * g if l in cot else cfg.beta * w * g
        return loss, cot

    loss, grad = forward_backward(net, xin, cfg.capture, cotangents)
    if expanded:
        grad = grad.sum(axis=0, keepdims=True)
    return loss, grad


def style_only(cfg):
    return replace(cfg, alpha=1.0, beta=0.0)


def content_only(cfg):
    return replace(cfg, alpha=0.0, beta=1.0)
