import numpy as np
import pytest

from hrst import InvalidArgumentError, generate_style, resample_bicubic
from hrst.style import mirror_tile


def seams(length, tile):
    return list(range(tile, length, tile))


@pytest.mark.parametrize("phi", [0.4, 0.5, 0.6, 0.7])
def test_seam_continuity(rng, phi):
    img = rng.random((3, 96, 80))
    out = generate_style(img, phi)
    th, tw = int(np.floor(96 * phi + 0.5)), int(np.floor(80 * phi + 0.5))
    for x in seams(80, tw):
        np.testing.assert_array_equal(out[:, :, x - 1], out[:, :, x])
    for y in seams(96, th):
        np.testing.assert_array_equal(out[:, y - 1, :], out[:, y, :])


def test_half_scale_example(rng):
    img = rng.random((1, 256, 256))
    out = generate_style(img, 0.5)
    assert out.shape == img.shape
    assert out[0, 0, 127] == out[0, 0, 128]
    tile = resample_bicubic(img, 128, 128)
    np.testing.assert_array_equal(out[:, :128, :128], tile)
    np.testing.assert_array_equal(out[:, :128, 128:], tile[:, :, ::-1])
    np.testing.assert_array_equal(out[:, 128:, :128], tile[:, ::-1, :])
    np.testing.assert_array_equal(out[:, 128:, 128:], tile[:, ::-1, ::-1])


def test_grassplot_factor_dims(rng):
    img = rng.random((3, 256, 256))
    out = generate_style(img, 0.4)
    assert out.shape == img.shape
    tile = resample_bicubic(img, 102, 102)
    np.testing.assert_array_equal(out[:, :102, :102], tile)


def test_constant(rng):
    out = generate_style(np.full((3, 50, 70), 0.3), 0.55)
    np.testing.assert_allclose(out, 0.3, atol=1e-12)


def test_values_come_from_tile(rng):
    img = rng.random((1, 64, 64))
    out = generate_style(img, 0.35)
    tile = resample_bicubic(img, 22, 22)
    assert tile.min() <= out.min() and out.max() <= tile.max()
    assert set(np.unique(out)) <= set(np.unique(tile))


def test_partial_tiles_cropped():
    tile = np.arange(6.0).reshape(1, 2, 3)
    out = mirror_tile(tile, 5, 7)
    assert out.shape == (1, 5, 7)
    np.testing.assert_array_equal(out[0, 0], [0, 1, 2, 2, 1, 0, 0])
    np.testing.assert_array_equal(out[0, :, 0], [0, 3, 3, 0, 0])


@pytest.mark.parametrize("phi", [0.0, 1.0, -0.2, 1.5])
def test_phi_range(rng, phi):
    with pytest.raises(InvalidArgumentError):
        generate_style(rng.random((1, 8, 8)), phi)
