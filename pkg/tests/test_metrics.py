import numpy as np
import pytest

from hrst import InvalidArgumentError, psnr, ssim


def test_psnr_identical(rng):
    a = rng.random((3, 16, 16))
    assert psnr(a, a) == 99.0


@pytest.mark.parametrize("offset,expected", [(0.1, 20.0), (0.01, 40.0)])
def test_psnr_offset(offset, expected):
    a = np.full((3, 12, 12), 0.4)
    assert psnr(a, a + offset) == pytest.approx(expected, abs=1e-9)


def test_psnr_mismatch(rng):
    with pytest.raises(InvalidArgumentError):
        psnr(rng.random((1, 4, 4)), rng.random((1, 4, 5)))


def test_ssim_identical(rng):
    a = rng.random((3, 32, 32))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant():
    a = np.full((1, 16, 16), 0.3)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_inverted_checkerboard():
    board = (np.indices((32, 32)).sum(axis=0) % 2).astype(float)[None]
    assert ssim(board, 1.0 - board) < 0


def test_ssim_degrades_with_noise(rng):
    a = rng.random((1, 40, 40))
    light = ssim(a, np.clip(a + 0.02 * rng.standard_normal(a.shape), 0, 1))
    heavy = ssim(a, np.clip(a + 0.2 * rng.standard_normal(a.shape), 0, 1))
    assert 1.0 > light > heavy


def test_ssim_symmetric(rng):
    a, b = rng.random((2, 1, 20, 20))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_too_small(rng):
    with pytest.raises(InvalidArgumentError):
        ssim(rng.random((1, 10, 10)), rng.random((1, 10, 10)))
