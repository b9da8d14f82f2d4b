import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbftopo import imaging
from rbftopo.errors import ValidationError
from rbftopo.imaging import RasterImage
from rbftopo.kernels import KernelFamily, KernelSpec
from rbftopo.registration import LandmarkPairs, invert_roles


def random_image(seed, w=17, h=11, maxval=255):
    rng = np.random.default_rng(seed)
    return RasterImage.from_array(rng.integers(0, maxval + 1, (h, w)), maxval)


class TestPgm:
    @pytest.mark.parametrize("binary", [True, False])
    @pytest.mark.parametrize("maxval", [255, 4095])
    def test_round_trip(self, binary, maxval):
        img = random_image(0, maxval=maxval)
        assert imaging.decode_pgm(imaging.encode_pgm(img, binary)) == img

    def test_header_comments(self):
        data = b"P2\n# made by hand\n3 2 # size\n9\n0 1 2\n3 4 9\n"
        img = imaging.decode_pgm(data)
        assert (img.width, img.height, img.maxval) == (3, 2, 9)
        np.testing.assert_array_equal(img.pixels, [[0, 1, 2], [3, 4, 9]])

    def test_binary_layout(self):
        img = RasterImage.from_array([[1, 2], [3, 4]])
        assert imaging.encode_pgm(img) == b"P5\n2 2\n255\n\x01\x02\x03\x04"

    @pytest.mark.parametrize("data", [b"P6\n1 1\n255\n\x00", b"P5\n2 2\n255\n\x00",
                                      b"P2\n2 1\n255\n1\n", b"P2\n1", b"P2\n1 1\n9\n12\n"])
    def test_malformed(self, data):
        with pytest.raises(ValidationError):
            imaging.decode_pgm(data)

    def test_read(self, tmp_path):
        img = random_image(1)
        path = tmp_path / "a.pgm"
        path.write_bytes(imaging.encode_pgm(img))
        assert imaging.read_pgm(path) == img


class TestSampling:
    def test_pixel_centers(self):
        pts = imaging.pixel_centers(4, 2)
        assert pts[0] == pytest.approx((0.125, 0.25))
        assert pts[-1] == pytest.approx((0.875, 0.75))

    def test_bilinear_midpoint(self):
        pix = np.array([[0.0, 10.0], [20.0, 30.0]])
        assert imaging.sample_bilinear(pix, 0.5, 0.5) == pytest.approx(15.0)

    def test_bilinear_clamps(self):
        pix = np.array([[0.0, 10.0], [20.0, 30.0]])
        assert imaging.sample_bilinear(pix, -3.0, 9.0) == 20.0


class TestWarp:
    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_identity_is_bit_identical(self, family):
        img = random_image(2, 32, 24)
        src = [(0.3, 0.3), (0.7, 0.6)]
        out = imaging.warp_image(img, LandmarkPairs(src, src), KernelSpec(family, 0.3))
        assert out == img

    @settings(max_examples=20, deadline=None)
    @given(value=st.integers(0, 255), family=st.sampled_from(list(KernelFamily)),
           dx=st.floats(-0.1, 0.1), dy=st.floats(-0.1, 0.1))
    def test_constant_image_is_fixed(self, value, family, dx, dy):
        img = RasterImage.from_array(np.full((16, 16), value))
        pairs = LandmarkPairs([(0.5, 0.5)], [(0.5 + dx, 0.5 + dy)])
        assert imaging.warp_image(img, pairs, KernelSpec(family, 0.4)) == img

    def test_compact_support_leaves_far_pixels(self):
        img = imaging.checkerboard(64, 64, 8)
        pairs = LandmarkPairs([(0.5, 0.5)], [(0.55, 0.52)])
        c = 0.2
        out = imaging.warp_image(img, pairs, KernelSpec("wendland31", c))
        centers = imaging.pixel_centers(64, 64)
        far = (np.linalg.norm(centers - (0.55, 0.52), axis=1) >= c).reshape(64, 64)
        np.testing.assert_array_equal(out.pixels[far], img.pixels[far])
        assert not np.array_equal(out.pixels, img.pixels)

    def test_landmark_moves_content(self):
        # a bright dot at the source lands on the target pixel
        pix = np.zeros((40, 40), dtype=int)
        pix[19:21, 19:21] = 255
        pairs = LandmarkPairs([(0.5, 0.5)], [(0.6, 0.7)])
        out = imaging.warp_image(RasterImage.from_array(pix), pairs, KernelSpec("gaussian", 0.25))
        row, col = np.unravel_index(np.argmax(out.pixels), out.pixels.shape)
        assert (col + 0.5) / 40 == pytest.approx(0.6, abs=0.03)
        assert (row + 0.5) / 40 == pytest.approx(0.7, abs=0.03)

    def test_checkerboard_round_trip(self):
        # fig1 matern32 configuration; the two fitted maps are not mutual inverses
        img = imaging.checkerboard(128, 128, 16)
        pairs = LandmarkPairs([(0.5, 0.5)], [(0.6, 0.7)])
        kernel = KernelSpec("matern32", 0.105)
        forward = imaging.warp_image(img, pairs, kernel)
        back = imaging.warp_image(forward, invert_roles(pairs), kernel)
        diff = np.abs(back.pixels.astype(int) - img.pixels.astype(int))
        assert diff.mean() <= 5

    def test_checkerboard_pattern(self):
        img = imaging.checkerboard(32, 32, 16)
        assert img.pixels[0, 0] == 255 and img.pixels[0, 16] == 0 and img.pixels[16, 16] == 255
