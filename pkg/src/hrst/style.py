import numpy as np

from ._validation import check_image
from .exceptions import InvalidArgumentError
from .image import resample_bicubic


def mirror_tile(tile, height, width):
    """Fill (height, width) with copies of ``tile``, flipping every other one.

    Odd tile columns are mirrored left-right and odd tile rows top-bottom,
    so the pixels on either side of every seam are equal. Partial tiles
    at the right and bottom are cropped.
    """
    tile = np.asarray(tile)
    th, tw = tile.shape[1:]
    ny = -(-height // th)
    nx = -(-width // tw)
    flipped_x = tile[:, :, ::-1]
    row_even = np.concatenate([tile if i % 2 == 0 else flipped_x for i in range(nx)], axis=2)
    row_odd = row_even[:, ::-1, :]
    full = np.concatenate([row_even if j % 2 == 0 else row_odd for j in range(ny)], axis=1)
    return np.ascontiguousarray(full[:, :height, :width])


def generate_style(initial_hr, phi_hat):
    """Down-scale ``initial_hr`` by ``phi_hat`` and mirror-tile it back to full size."""
    img = check_image(initial_hr, name="initial_hr")
    phi_hat = float(phi_hat)
    if not 0.0 < phi_hat < 1.0:
        raise InvalidArgumentError(f"phi_hat must lie in (0, 1), got {phi_hat}")
    _, h, w = img.shape
    tw = max(1, int(np.floor(w * phi_hat + 0.5)))
    th = max(1, int(np.floor(h * phi_hat + 0.5)))
    tile = resample_bicubic(img, tw, th)
    return mirror_tile(tile, h, w)
