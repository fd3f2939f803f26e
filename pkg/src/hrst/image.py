"""Planar image helpers: resampling, luma, patch split/merge and file I/O.

Images are float64 numpy arrays shaped (channels, height, width) with a
nominal sample range of [0, 1].
"""
from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from ._validation import check_image
from .exceptions import ImageIOError, InvalidArgumentError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def cubic_kernel(x, a=-0.5):
    """Keys cubic convolution kernel; a = -0.5 gives Catmull-Rom."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def resample_matrix(n_in, n_out):
    """Dense (n_out, n_in) matrix of normalized bicubic tap weights.

    When shrinking, the kernel is stretched by the inverse ratio so it
    acts as a low-pass filter. Out-of-range taps are clamped onto the
    border sample.
    """
    scale = n_out / n_in
    kscale = min(scale, 1.0)
    support = 2.0 / kscale
    centers = (np.arange(n_out) + 0.5) / scale - 0.5
    first = np.floor(centers - support).astype(int) + 1
    ntaps = int(math.ceil(2 * support)) + 1
    taps = first[:, None] + np.arange(ntaps)[None, :]
    weights = cubic_kernel((taps - centers[:, None]) * kscale)
    weights /= weights.sum(axis=1, keepdims=True)
    mat = np.zeros((n_out, n_in))
    rows = np.broadcast_to(np.arange(n_out)[:, None], taps.shape)
    np.add.at(mat, (rows, np.clip(taps, 0, n_in - 1)), weights)
    return mat


def resample_bicubic(img, target_width, target_height):
    """Resize ``img`` to (target_height, target_width) with bicubic taps."""
    img = check_image(img)
    if int(target_width) < 1 or int(target_height) < 1:
        raise InvalidArgumentError(
            f"target size must be positive, got {target_width}x{target_height}"
        )
    _, h, w = img.shape
    tw, th = int(target_width), int(target_height)
    if (tw, th) == (w, h):
        return img.copy()
    wy = resample_matrix(h, th)
    wx = resample_matrix(w, tw)
    out = np.einsum("yh,chw,xw->cyx", wy, img, wx, optimize=True)
    return np.clip(out, 0.0, 1.0)


def to_luma(img):
    """Collapse RGB to a Rec.601 luma plane; single planes pass through."""
    img = check_image(img, channels=(1, 3))
    if img.shape[0] == 1:
        return img
    return np.tensordot(LUMA_WEIGHTS, img, axes=1)[np.newaxis]


@dataclass
class PatchGrid:
    patch_size: int
    stride: int
    grid_cols: int
    grid_rows: int
    source_width: int
    source_height: int
    # (origin_x, origin_y, patch) triples; any order is accepted by merge
    patches: list = field(default_factory=list)


def _grid_origins(length, patch_size, stride):
    origins = list(range(0, length - patch_size, stride))
    origins.append(length - patch_size)
    return origins


def split_patches(img, patch_size, overlap_fraction):
    """Cut ``img`` into overlapping square patches covering every pixel.

    Origins advance by ``round(patch_size * (1 - overlap_fraction))`` and
    the last row/column is pulled back to end on the image border.
    """
    img = check_image(img)
    _, h, w = img.shape
    patch_size = int(patch_size)
    if not 0.0 <= overlap_fraction < 1.0:
        raise InvalidArgumentError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    if patch_size < 1 or patch_size > min(h, w):
        raise InvalidArgumentError(f"patch size {patch_size} does not fit a {w}x{h} image")
    stride = max(1, int(round(patch_size * (1.0 - overlap_fraction))))
    xs = _grid_origins(w, patch_size, stride)
    ys = _grid_origins(h, patch_size, stride)
    patches = [
        (x, y, img[:, y:y + patch_size, x:x + patch_size].copy()) for y in ys for x in xs
    ]
    return PatchGrid(patch_size, stride, len(xs), len(ys), w, h, patches)


def _ramp_weights(origins, patch_size):
    """1-D blend profile per origin: linear ramps over shared margins."""
    profiles = {}
    for k, o in enumerate(origins):
        wt = np.ones(patch_size)
        if k > 0:
            ov = origins[k - 1] + patch_size - o
            if ov > 0:
                wt[:ov] = np.minimum(wt[:ov], (np.arange(ov) + 0.5) / ov)
        if k + 1 < len(origins):
            ov = o + patch_size - origins[k + 1]
            if ov > 0:
                wt[patch_size - ov:] = np.minimum(
                    wt[patch_size - ov:], (np.arange(ov)[::-1] + 0.5) / ov
                )
        profiles[o] = wt
    return profiles


def merge_patches(grid):
    """Blend a PatchGrid back into a single image.

    Each pixel is the weight-normalized sum of the patches covering it.
    """
    p = int(grid.patch_size)
    if not grid.patches:
        raise InvalidArgumentError("patch grid is empty")
    channels = None
    for ox, oy, patch in grid.patches:
        patch = np.asarray(patch)
        if patch.ndim == 2:
            patch = patch[np.newaxis]
        if patch.shape[1:] != (p, p):
            raise InvalidArgumentError(
                f"patch at ({ox}, {oy}) is {patch.shape[2]}x{patch.shape[1]}, expected {p}x{p}"
            )
        if channels is None:
            channels = patch.shape[0]
        elif patch.shape[0] != channels:
            raise InvalidArgumentError("patches disagree on channel count")
        if ox < 0 or oy < 0 or ox + p > grid.source_width or oy + p > grid.source_height:
            raise InvalidArgumentError(f"patch origin ({ox}, {oy}) lies outside the source")

    wx = _ramp_weights(sorted({ox for ox, _, _ in grid.patches}), p)
    wy = _ramp_weights(sorted({oy for _, oy, _ in grid.patches}), p)
    acc = np.zeros((channels, grid.source_height, grid.source_width))
    norm = np.zeros((grid.source_height, grid.source_width))
    # accumulate in grid order so the result does not depend on list order
    for ox, oy, patch in sorted(grid.patches, key=lambda t: (t[1], t[0])):
        patch = np.asarray(patch, dtype=np.float64).reshape(channels, p, p)
        wt = np.outer(wy[oy], wx[ox])
        acc[:, oy:oy + p, ox:ox + p] += patch * wt
        norm[oy:oy + p, ox:ox + p] += wt
    if np.any(norm == 0):
        raise InvalidArgumentError("patch grid does not cover the whole source image")
    return acc / norm


def read_image(path):
    """Load an 8-bit PNG/PPM/PGM file as a (C, H, W) float array in [0, 1]."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            if im.mode not in ("L", "RGB"):
                if im.mode in ("I", "I;16", "I;16B", "F"):
                    raise ImageIOError(f"{path}: unsupported pixel format {im.mode}")
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: no such file") from exc
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        if isinstance(exc, ImageIOError):
            raise
        raise ImageIOError(f"{path}: cannot decode image ({exc})") from exc
    if arr.ndim == 2:
        return arr[np.newaxis]
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def write_image(path, img):
    """Write ``img`` as 8-bit PNG, PPM or PGM, chosen by file suffix."""
    path = Path(path)
    img = check_image(img, channels=(1, 3))
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    suffix = path.suffix.lower()
    if suffix == ".pgm" and img.shape[0] != 1:
        data = np.round(np.clip(to_luma(img), 0, 1) * 255.0).astype(np.uint8)
    if suffix == ".ppm" and img.shape[0] == 1:
        data = np.repeat(data, 3, axis=0)
    if data.shape[0] == 1:
        im = PILImage.fromarray(data[0], mode="L")
    else:
        im = PILImage.fromarray(np.ascontiguousarray(data.transpose(1, 2, 0)), mode="RGB")
    fmt = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}.get(suffix)
    if fmt is None:
        raise ImageIOError(f"{path}: unsupported output format {suffix!r}")
    try:
        im.save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write image ({exc})") from exc
