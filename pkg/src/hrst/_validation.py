import numpy as np

from .exceptions import InvalidArgumentError


def check_image(img, name="img", channels=None, min_size=1):
    """Return ``img`` as a float64 (C, H, W) array.

    2-D input is treated as a single-channel plane. Raises
    InvalidArgumentError on wrong rank, empty or non-finite data.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise InvalidArgumentError(f"{name} must be (C, H, W) or (H, W), got shape {arr.shape}")
    if channels is not None and arr.shape[0] not in np.atleast_1d(channels):
        raise InvalidArgumentError(f"{name} has {arr.shape[0]} channels, expected {channels}")
    if arr.shape[1] < min_size or arr.shape[2] < min_size:
        raise InvalidArgumentError(
            f"{name} is {arr.shape[1]}x{arr.shape[2]}, needs at least {min_size}x{min_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite samples")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"{names[0]} shape {a.shape} does not match {names[1]} shape {b.shape}"
        )


def check_finite_scalar(value, name):
    value = float(value)
    if not np.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")
    return value
