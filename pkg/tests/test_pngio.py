import numpy as np
import pytest

from cutremain import pngio
from cutremain.errors import InvalidParameterError


class TestPngRoundTrip:
    def test_8bit_grayscale_exact(self, tmp_path):
        arr = np.arange(256).reshape(16, 16, 1) / 255.0
        path = tmp_path / "g.png"
        pngio.save_image(path, arr)
        again = pngio.load_image(path)
        assert np.array_equal(again, arr)
        assert pngio.image_size(path) == (16, 16, 1)

    def test_8bit_rgb_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(8, 12, 3)) / 255.0
        path = tmp_path / "c.png"
        pngio.save_image(path, arr)
        assert np.array_equal(pngio.load_image(path), arr)
        assert pngio.image_size(path) == (12, 8, 3)

    def test_16bit_grayscale_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        arr = rng.integers(0, 65536, size=(9, 7, 1)) / 65535.0
        path = tmp_path / "deep.png"
        pngio.save_image(path, arr, bit_depth=16)
        assert np.allclose(pngio.load_image(path), arr, atol=0)

    def test_rounding_to_nearest(self, tmp_path):
        # 0.4/255 rounds down, 0.6/255 rounds up.
        arr = np.array([[[0.4 / 255], [0.6 / 255]]])
        path = tmp_path / "r.png"
        pngio.save_image(path, arr)
        again = pngio.load_image(path)
        assert again[0, 0, 0] == 0.0
        assert again[0, 1, 0] == 1 / 255

    def test_16bit_rgb_rejected(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            pngio.save_image(tmp_path / "x.png", np.zeros((4, 4, 3)), bit_depth=16)

    def test_identical_saves_are_byte_identical(self, tmp_path):
        rng = np.random.default_rng(2)
        arr = rng.integers(0, 256, size=(32, 32, 1)) / 255.0
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        pngio.save_image(p1, arr)
        pngio.save_image(p2, arr)
        assert p1.read_bytes() == p2.read_bytes()
