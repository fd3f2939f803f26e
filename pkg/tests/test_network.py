import struct

import numpy as np
import pytest

from hrst import (
    InvalidArgumentError,
    WeightFormatError,
    backward,
    forward,
    load_weights,
    random_network,
    save_weights,
    tiny_layers,
    vgg16_layers,
)
from hrst.network import MAGIC, conv, pool

from gradcheck import smooth_coordinates


def directional_fd(net, img, layer, v, e, h=1e-3):
    plus = forward(net, img + h * e, {layer})[layer].data
    minus = forward(net, img - h * e, {layer})[layer].data
    return float(np.sum((plus - minus) * v)) / (2 * h)


class TestArchitecture:
    def test_vgg16_plan(self):
        layers = vgg16_layers()
        assert sum(l.kind == "conv" for l in layers) == 13
        assert sum(l.kind == "pool" for l in layers) == 5
        assert [l.out_channels for l in layers if l.kind == "conv"] == [
            64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512
        ]
        assert layers[-1].name == "pool5" and layers[-2].name == "conv13"

    def test_vgg16_conv13_shape(self):
        net = random_network(vgg16_layers(), seed=0)
        feats = forward(net, np.random.default_rng(0).random((3, 224, 224)), {13})
        assert feats[13].channels == 512
        assert (feats[13].height, feats[13].width) == (14, 14)
        assert feats[13].spatial_size == 196


class TestForward:
    def test_zero_image_zero_bias(self):
        net = random_network(tiny_layers(), seed=3, bias_scale=0.0)
        feats = forward(net, np.zeros((3, 12, 12)), {1, 2, 3})
        assert all(not f.data.any() for f in feats.values())

    def test_empty_capture(self, tiny_net, rng):
        assert forward(tiny_net, rng.random((3, 8, 8)), set()) == {}

    def test_nonnegative_and_deterministic(self, tiny_net, rng):
        img = rng.random((3, 20, 18))
        a = forward(tiny_net, img, {1, 2, 3})
        b = forward(tiny_net, img, {1, 2, 3})
        for k in a:
            assert np.array_equal(a[k].data, b[k].data)
            assert a[k].data.min() >= 0
        assert (a[3].height, a[3].width) == (10, 9)

    def test_wrong_channels(self, tiny_net):
        with pytest.raises(InvalidArgumentError):
            forward(tiny_net, np.zeros((1, 8, 8)), {1})

    def test_empty_image(self, tiny_net):
        with pytest.raises(InvalidArgumentError):
            forward(tiny_net, np.zeros((3, 0, 8)), {1})

    def test_unknown_layer(self, tiny_net):
        with pytest.raises(InvalidArgumentError):
            forward(tiny_net, np.zeros((3, 8, 8)), {7})

    def test_mean_subtraction(self, rng):
        net = random_network(tiny_layers(), seed=1, means=[0.1, 0.2, 0.3])
        base = random_network(tiny_layers(), seed=1)
        img = rng.random((3, 8, 8))
        shifted = img - np.array([0.1, 0.2, 0.3], dtype=np.float32).astype(float)[:, None, None]
        np.testing.assert_array_equal(forward(net, img, {2})[2].data, forward(base, shifted, {2})[2].data)


class TestBackward:
    def test_zero_cotangent(self, tiny_net, rng):
        img = rng.random((3, 10, 10))
        grad = backward(tiny_net, img, {2: np.zeros((8, 100))})
        assert grad.shape == img.shape and not grad.any()

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("pooling", ["max", "avg"])
    def test_finite_difference(self, seed, pooling):
        rng = np.random.default_rng(seed)
        net = random_network(tiny_layers(), seed=seed, pooling=pooling)
        img = rng.random((3, 12, 12))
        layer = 3
        shape = forward(net, img, {layer})[layer].data.shape
        v = rng.standard_normal(shape)
        grad = backward(net, img, {layer: v})
        for idx in smooth_coordinates(net, img, layer, 3, rng):
            e = np.zeros_like(img)
            e[idx] = 1.0
            fd = directional_fd(net, img, layer, v, e)
            an = float(np.sum(grad * e))
            assert abs(fd - an) <= 1e-3 * max(abs(fd), abs(an), 1e-8)

    def test_additivity(self, tiny_net, rng):
        img = rng.random((3, 12, 12))
        feats = forward(tiny_net, img, {1, 3})
        v1 = rng.standard_normal(feats[1].data.shape)
        v3 = rng.standard_normal(feats[3].data.shape)
        both = backward(tiny_net, img, {1: v1, 3: v3})
        only1 = backward(tiny_net, img, {1: v1, 3: np.zeros_like(v3)})
        np.testing.assert_allclose(both, only1 + backward(tiny_net, img, {3: v3}), atol=1e-12)
        np.testing.assert_allclose(only1, backward(tiny_net, img, {1: v1}), atol=1e-15)

    def test_linearity(self, tiny_net, rng):
        img = rng.random((3, 12, 12))
        shape = forward(tiny_net, img, {2})[2].data.shape
        v1, v2 = rng.standard_normal(shape), rng.standard_normal(shape)
        lhs = backward(tiny_net, img, {2: 2.5 * v1 - 0.7 * v2})
        rhs = 2.5 * backward(tiny_net, img, {2: v1}) - 0.7 * backward(tiny_net, img, {2: v2})
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_maxpool_tie_goes_to_first(self):
        net = random_network((conv(1), pool(), conv(1)), seed=0, in_channels=3)
        from hrst.network import _pool_backward, _pool_forward

        x = np.ones((1, 2, 2))
        out, arg = _pool_forward(x, "max")
        grad = _pool_backward(np.ones((1, 1, 1)), arg, x.shape, "max")
        np.testing.assert_array_equal(grad[0], [[1, 0], [0, 0]])
        assert net.conv_indices == (1, 2)

    def test_shape_mismatch(self, tiny_net, rng):
        with pytest.raises(InvalidArgumentError):
            backward(tiny_net, rng.random((3, 10, 10)), {2: np.zeros((8, 99))})


class TestWeightFile:
    def test_round_trip(self, tmp_path):
        net = random_network(tiny_layers(), seed=5, means=[0.4, 0.45, 0.5])
        path = tmp_path / "w.bin"
        save_weights(net, path)
        loaded = load_weights(path, tiny_layers())
        assert loaded == net
        for a, b in zip(loaded.weights, net.weights):
            assert a.tobytes() == b.tobytes()
        assert len(loaded.checksum) == 64

    def test_vgg16_default_plan(self, tmp_path):
        net = random_network(vgg16_layers(), seed=1)
        path = tmp_path / "vgg.bin"
        save_weights(net, path)
        assert load_weights(path) == net

    def test_truncated_names_layer(self, tmp_path):
        path = tmp_path / "w.bin"
        save_weights(random_network(tiny_layers(), seed=0), path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(WeightFormatError) as info:
            load_weights(path, tiny_layers())
        assert info.value.layer == 3 and "conv3" in str(info.value)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 64)
        with pytest.raises(WeightFormatError):
            load_weights(path, tiny_layers())

    def test_channel_plan_mismatch(self, tmp_path):
        # a VGG-16 file whose conv3 declares 127 outputs
        path = tmp_path / "bad.bin"
        plan = [64, 64, 127, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512]
        parts = [MAGIC, struct.pack("<I", 13), np.zeros(3, "<f4").tobytes()]
        cin = 3
        for out in plan:
            parts.append(struct.pack("<4I", out, cin, 3, 3))
            parts.append(np.zeros(out * cin * 9 + out, "<f4").tobytes())
            cin = out
        path.write_bytes(b"".join(parts))
        with pytest.raises(WeightFormatError) as info:
            load_weights(path)
        assert info.value.layer == 3 and "128" in str(info.value)

    def test_layer_count_mismatch(self, tmp_path):
        path = tmp_path / "w.bin"
        save_weights(random_network(tiny_layers(), seed=0), path)
        with pytest.raises(WeightFormatError):
            load_weights(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "w.bin"
        save_weights(random_network(tiny_layers(), seed=0), path)
        path.write_bytes(path.read_bytes() + b"\0")
        with pytest.raises(WeightFormatError):
            load_weights(path, tiny_layers())


def test_random_network_determinism():
    a = random_network(tiny_layers(), seed=9)
    assert a == random_network(tiny_layers(), seed=9)
    assert a != random_network(tiny_layers(), seed=10)


def test_network_is_read_only(tiny_net):
    with pytest.raises(ValueError):
        tiny_net.weights[0][0, 0, 0, 0] = 1.0
