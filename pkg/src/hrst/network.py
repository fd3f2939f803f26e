"""VGG-16 shaped feature extractor with a hand-written reverse pass.

All arithmetic runs in float64. Weights are kept at float32 precision so
that they round-trip through the binary weight file unchanged.
"""
from dataclasses import dataclass, field
from functools import cached_property
import hashlib
from pathlib import Path
import struct

import numpy as np

from ._validation import check_image
from .exceptions import InvalidArgumentError, WeightFormatError

MAGIC = b"HRSTNET1"


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # "conv" or "pool"
    out_channels: int = 0
    name: str = ""


def conv(out_channels, name=""):
    return LayerSpec("conv", int(out_channels), name)


def pool(name=""):
    return LayerSpec("pool", 0, name)


def _named(layers):
    """Assign conv1..convN / poolK names in order."""
    out, nc, npool = [], 0, 0
    for layer in layers:
        if layer.kind == "conv":
            nc += 1
            out.append(LayerSpec("conv", layer.out_channels, f"conv{nc}"))
        elif layer.kind == "pool":
            npool += 1
            out.append(LayerSpec("pool", 0, f"pool{npool}"))
        else:
            raise InvalidArgumentError(f"unknown layer kind {layer.kind!r}")
    return tuple(out)


def vgg16_layers():
    """The 13-conv / 5-pool VGG-16 convolutional trunk."""
    plan = [64, 64, "P", 128, 128, "P", 256, 256, 256, "P", 512, 512, 512, "P", 512, 512, 512, "P"]
    return _named([pool() if c == "P" else conv(c) for c in plan])


def tiny_layers(widths=(8, 8, 16)):
    """Small conv stack for tests and quick runs: conv, conv, pool, conv, ..."""
    layers = []
    for k, width in enumerate(widths):
        if k == 2:
            layers.append(pool())
        layers.append(conv(width))
    return _named(layers)


@dataclass(frozen=True)
class Network:
    layers: tuple
    weights: tuple  # per conv: (out, in, 3, 3)
    biases: tuple  # per conv: (out,)
    means: np.ndarray
    pooling: str = "max"
    checksum: str = field(default="", compare=False)

    def __post_init__(self):
        if self.pooling not in ("max", "avg"):
            raise InvalidArgumentError(f"pooling must be 'max' or 'avg', got {self.pooling!r}")
        convs = [l for l in self.layers if l.kind == "conv"]
        if len(convs) != len(self.weights) or len(convs) != len(self.biases):
            raise InvalidArgumentError("weight count does not match the layer plan")
        in_ch = len(self.means)
        for k, (spec, w, b) in enumerate(zip(convs, self.weights, self.biases), start=1):
            if w.shape != (spec.out_channels, in_ch, 3, 3) or b.shape != (spec.out_channels,):
                raise InvalidArgumentError(
                    f"conv{k}: weight {w.shape} / bias {b.shape} inconsistent with plan "
                    f"({spec.out_channels}, {in_ch}, 3, 3)"
                )
            in_ch = spec.out_channels
        for arr in (*self.weights, *self.biases, self.means):
            arr.setflags(write=False)

    @cached_property
    def taps(self):
        """Per-tap contiguous kernels: (3, 3, out, in) forward, (3, 3, in, out) reverse."""
        fwd = tuple(np.ascontiguousarray(w.transpose(2, 3, 0, 1)) for w in self.weights)
        rev = tuple(np.ascontiguousarray(w.transpose(2, 3, 1, 0)) for w in self.weights)
        return fwd, rev

    @property
    def in_channels(self):
        return len(self.means)

    @property
    def conv_indices(self):
        return tuple(range(1, len(self.weights) + 1))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.layers == other.layers
            and self.pooling == other.pooling
            and np.array_equal(self.means, other.means)
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    __hash__ = object.__hash__


@dataclass
class FeatureMaps:
    """Post-ReLU activations of one conv layer as a (C, N) matrix."""

    layer: int
    data: np.ndarray
    height: int
    width: int

    @property
    def channels(self):
        return self.data.shape[0]

    @property
    def spatial_size(self):
        return self.data.shape[1]


def _f32(arr):
    return np.asarray(arr, dtype=np.float32).astype(np.float64)


def random_network(layers=None, seed=0, in_channels=3, pooling="max", bias_scale=0.05, means=None):
    """Deterministic Gaussian weights scaled by 1/sqrt(fan-in)."""
    layers = _named(layers if layers is not None else tiny_layers())
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    cin = in_channels
    for spec in layers:
        if spec.kind != "conv":
            continue
        fan_in = cin * 9
        weights.append(_f32(rng.standard_normal((spec.out_channels, cin, 3, 3)) / np.sqrt(fan_in)))
        biases.append(_f32(rng.standard_normal(spec.out_channels) * bias_scale))
        cin = spec.out_channels
    means = _f32(np.zeros(in_channels) if means is None else means)
    return Network(layers, tuple(weights), tuple(biases), means, pooling)


def save_weights(net, path):
    """Write ``net`` in the little-endian HRSTNET1 format."""
    if net.in_channels != 3:
        raise InvalidArgumentError("the weight file format stores exactly 3 channel means")
    parts = [struct.pack("<I", len(net.weights)), net.means.astype("<f4").tobytes()]
    for w, b in zip(net.weights, net.biases):
        parts.append(struct.pack("<4I", *w.shape))
        parts.append(w.astype("<f4").tobytes())
        parts.append(b.astype("<f4").tobytes())
    Path(path).write_bytes(MAGIC + b"".join(parts))


def load_weights(path, layers=None, pooling="max"):
    """Read an HRSTNET1 weight file and validate it against a layer plan.

    ``layers`` defaults to the VGG-16 trunk. Every conv must be 3x3, chain
    its input channels from the previous layer, and match the plan's
    output width.

    Raises
    ------
    WeightFormatError
        On bad magic, truncation, trailing bytes or shape mismatch; the
        message names the offending conv layer.
    """
    layers = _named(layers if layers is not None else vgg16_layers())
    plan = [l.out_channels for l in layers if l.kind == "conv"]
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise WeightFormatError("bad magic; not an HRSTNET1 weight file")
    pos = 8

    def take(nbytes, layer=None, what="data"):
        nonlocal pos
        if pos + nbytes > len(blob):
            raise WeightFormatError(f"file truncated while reading {what}", layer)
        chunk = blob[pos:pos + nbytes]
        pos += nbytes
        return chunk

    (count,) = struct.unpack("<I", take(4, what="layer count"))
    if count != len(plan):
        raise WeightFormatError(f"file has {count} conv layers, plan expects {len(plan)}")
    means = np.frombuffer(take(12, what="channel means"), dtype="<f4").astype(np.float64)
    weights, biases = [], []
    cin = 3
    for k, expected in enumerate(plan, start=1):
        out_ch, in_ch, kh, kw = struct.unpack("<4I", take(16, k, "layer header"))
        if (kh, kw) != (3, 3):
            raise WeightFormatError(f"kernel is {kh}x{kw}, expected 3x3", k)
        if in_ch != cin:
            raise WeightFormatError(f"shape mismatch: {in_ch} input channels, expected {cin}", k)
        if out_ch != expected:
            raise WeightFormatError(
                f"shape mismatch: {out_ch} output channels, plan requires {expected}", k
            )
        n = out_ch * in_ch * kh * kw
        w = np.frombuffer(take(4 * n, k, "weights"), dtype="<f4").reshape(out_ch, in_ch, kh, kw)
        b = np.frombuffer(take(4 * out_ch, k, "biases"), dtype="<f4")
        weights.append(w.astype(np.float64))
        biases.append(b.astype(np.float64))
        cin = out_ch
    if pos != len(blob):
        raise WeightFormatError(f"{len(blob) - pos} trailing bytes after the last layer")
    checksum = hashlib.sha256(blob[8:]).hexdigest()
    return Network(layers, tuple(weights), tuple(biases), means, pooling, checksum)


# -- forward / reverse passes -------------------------------------------------


def _conv_forward(x, taps, b):
    # taps: (3, 3, out, in)
    c, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    out = np.empty((taps.shape[2], h * wd))
    out[:] = b[:, None]
    for dy in range(3):
        for dx in range(3):
            out += taps[dy, dx] @ xp[:, dy:dy + h, dx:dx + wd].reshape(c, -1)
    return out.reshape(-1, h, wd)


def _conv_backward(g, taps_t):
    # taps_t: (3, 3, in, out)
    _, h, wd = g.shape
    gflat = g.reshape(g.shape[0], -1)
    gp = np.zeros((taps_t.shape[2], h + 2, wd + 2))
    for dy in range(3):
        for dx in range(3):
            gp[:, dy:dy + h, dx:dx + wd] += (taps_t[dy, dx] @ gflat).reshape(-1, h, wd)
    return gp[:, 1:-1, 1:-1]


def _pool_forward(x, mode):
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise InvalidArgumentError(f"feature map {h}x{w} too small to pool")
    blocks = (
        x[:, :2 * h2, :2 * w2].reshape(c, h2, 2, w2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    )
    if mode == "avg":
        return blocks.mean(axis=-1), None
    arg = blocks.argmax(axis=-1)  # first maximum in scan order
    return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg


def _pool_backward(g, arg, in_shape, mode):
    c, h, w = in_shape
    h2, w2 = g.shape[1:]
    if mode == "avg":
        blocks = np.repeat(g[..., None] / 4.0, 4, axis=-1)
    else:
        blocks = np.zeros((c, h2, w2, 4))
        np.put_along_axis(blocks, arg[..., None], g[..., None], axis=-1)
    out = np.zeros(in_shape)
    out[:, :2 * h2, :2 * w2] = blocks.reshape(c, h2, w2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, 2 * h2, 2 * w2)
    return out


def _prepare_input(net, img):
    img = check_image(img)
    if img.shape[0] != net.in_channels:
        raise InvalidArgumentError(
            f"network expects {net.in_channels} input channels, image has {img.shape[0]}"
        )
    return img - net.means[:, None, None]


def _run(net, img, capture, keep_cache):
    """Forward pass up to the deepest captured conv."""
    capture = set(capture)
    unknown = capture - set(net.conv_indices)
    if unknown:
        raise InvalidArgumentError(f"capture layers {sorted(unknown)} not in network")
    x = _prepare_input(net, img)
    feats, cache = {}, []
    if not capture:
        return feats, cache
    last = max(capture)
    k = 0
    for spec in net.layers:
        if spec.kind == "conv":
            k += 1
            pre = _conv_forward(x, net.taps[0][k - 1], net.biases[k - 1])
            x = np.maximum(pre, 0.0)
            if keep_cache:
                cache.append(("conv", k, pre > 0.0))
            if k in capture:
                feats[k] = FeatureMaps(k, x.reshape(x.shape[0], -1), x.shape[1], x.shape[2])
            if k == last:
                break
        else:
            in_shape = x.shape
            x, arg = _pool_forward(x, net.pooling)
            if keep_cache:
                cache.append(("pool", in_shape, arg))
    return feats, cache


def forward(net, img, capture):
    """Post-ReLU feature maps for each conv index in ``capture``."""
    feats, _ = _run(net, img, capture, keep_cache=False)
    return feats


def _reverse(net, cache, feats, cotangents, input_shape):
    grad = None
    for entry in reversed(cache):
        if entry[0] == "conv":
            _, k, mask = entry
            if k in cotangents:
                fm = feats[k]
                v = np.asarray(cotangents[k], dtype=np.float64).reshape(fm.channels, fm.height, fm.width)
                grad = v.copy() if grad is None else grad + v
            if grad is not None:
                grad = _conv_backward(grad * mask, net.taps[1][k - 1])
        elif grad is not None:
            _, in_shape, arg = entry
            grad = _pool_backward(grad, arg, in_shape, net.pooling)
    if grad is None:
        return np.zeros(input_shape)
    return grad


def _check_cotangents(feats, cotangents):
    for k, v in cotangents.items():
        if k not in feats:
            raise InvalidArgumentError(f"cotangent given for conv{k} which was not captured")
        shape = np.shape(v)
        fm = feats[k]
        if shape != (fm.channels, fm.spatial_size):
            raise InvalidArgumentError(
                f"conv{k} cotangent has shape {shape}, expected {(fm.channels, fm.spatial_size)}"
            )


def forward_backward(net, img, capture, cotangent_fn):
    """One forward pass, then a reverse pass with cotangents from ``cotangent_fn``.

    ``cotangent_fn(feats)`` receives the captured FeatureMaps and returns
    ``(value, cotangents)``; the result is ``(value, pixel_gradient)``.
    """
    img = check_image(img)
    feats, cache = _run(net, img, capture, keep_cache=True)
    value, cotangents = cotangent_fn(feats)
    _check_cotangents(feats, cotangents)
    return value, _reverse(net, cache, feats, cotangents, img.shape)


def backward(net, img, cotangents):
    """Vector-Jacobian product of the captured activations w.r.t. input pixels."""
    img = check_image(img)
    _, grad = forward_backward(net, img, set(cotangents), lambda feats: (None, cotangents))
    return grad
