"""Full-reference quality metrics on [0, 1] images."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_image, check_same_shape
from .image import to_luma

PSNR_CAP = 99.0


def psnr(a, b):
    """Peak signal-to-noise ratio in dB, capped at 99 dB for identical inputs."""
    a = check_image(a, name="a")
    b = check_image(b, name="b")
    check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def gaussian_window(size=11, sigma=1.5):
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(plane, g):
    rows = sliding_window_view(plane, len(g), axis=1) @ g
    return sliding_window_view(rows, len(g), axis=0) @ g


def ssim(a, b, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean structural similarity of the luma planes of ``a`` and ``b``.

    Local statistics use a Gaussian window over the valid region only;
    dynamic range is 1.
    """
    a = check_image(a, name="a", channels=(1, 3), min_size=window)
    b = check_image(b, name="b", channels=(1, 3), min_size=window)
    check_same_shape(a, b)
    x = to_luma(a)[0]
    y = to_luma(b)[0]
    g = gaussian_window(window, sigma)
    c1 = k1 ** 2
    c2 = k2 ** 2
    mx, my = _filter_valid(x, g), _filter_valid(y, g)
    sxx = _filter_valid(x * x, g) - mx * mx
    syy = _filter_valid(y * y, g) - my * my
    sxy = _filter_valid(x * y, g) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
