"""
Grayscale raster images (portable graymap) and backward warping.

Pixel centers live in normalized coordinates ``x = (col + 0.5) / width`` and
``y = (row + 0.5) / height``, so row 0 is the top of the image and landmark
coordinates are given in the same [0, 1]^2 frame.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import KernelSpec
from .registration import LandmarkPairs, fit, invert_roles, map_point


@dataclass(frozen=True, eq=False)
class RasterImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width), row-major
    maxval: int = 255

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("image must be nonempty")
        if not 0 < self.maxval <= 65535:
            raise ValidationError(f"maxval must be in 1..65535, got {self.maxval}")
        pix = np.asarray(self.pixels)
        if pix.size != self.width * self.height:
            raise ValidationError(
                f"expected {self.width * self.height} pixels, got {pix.size}")
        if pix.size and (pix.min() < 0 or pix.max() > self.maxval):
            raise ValidationError(f"intensities must lie in [0, {self.maxval}]")
        dtype = np.uint8 if self.maxval < 256 else np.uint16
        pix = pix.reshape(self.height, self.width).astype(dtype)
        pix.setflags(write=False)
        object.__setattr__(self, "pixels", pix)

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return (self.maxval == other.maxval and self.pixels.shape == other.pixels.shape
                and np.array_equal(self.pixels, other.pixels))

    @classmethod
    def from_array(cls, array, maxval=255):
        array = np.asarray(array)
        return cls(array.shape[1], array.shape[0], array, maxval)


def _header_tokens(data: bytes, count: int):
    """First `count` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValidationError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def decode_pgm(data: bytes) -> RasterImage:
    tokens, pos = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValidationError(f"not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValidationError("malformed PGM header") from None
    n = width * height
    if magic == b"P2":
        try:
            values = np.array([int(v) for v in data[pos:].split()[:n]])
        except ValueError:
            raise ValidationError("malformed P2 pixel data") from None
    else:
        body = data[pos + 1:]  # exactly one whitespace byte ends the header
        dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
        if len(body) < n * dtype.itemsize:
            raise ValidationError("truncated P5 pixel data")
        values = np.frombuffer(body[:n * dtype.itemsize], dtype=dtype)
    if values.size != n:
        raise ValidationError(f"expected {n} pixels, found {values.size}")
    return RasterImage(width, height, values, maxval)


def encode_pgm(img: RasterImage, binary: bool = True) -> bytes:
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{img.maxval}\n".encode("ascii")
    if binary:
        dtype = np.uint8 if img.maxval < 256 else np.dtype(">u2")
        return header + img.pixels.astype(dtype).tobytes()
    rows = [" ".join(str(int(v)) for v in row) for row in img.pixels]
    return header + ("\n".join(rows) + "\n").encode("ascii")


def read_pgm(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def pixel_centers(width: int, height: int) -> np.ndarray:
    cols, rows = np.meshgrid(np.arange(width), np.arange(height))
    return np.column_stack([(cols.ravel() + 0.5) / width, (rows.ravel() + 0.5) / height])


def sample_bilinear(pixels, x, y):
    """Bilinear samples at pixel coordinates, clamped to the nearest edge pixel."""
    pixels = np.asarray(pixels, dtype=float)
    h, w = pixels.shape
    x = np.clip(x, 0.0, w - 1)
    y = np.clip(y, 0.0, h - 1)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
    bottom = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def warp_image(img: RasterImage, pairs: LandmarkPairs, kernel: KernelSpec) -> RasterImage:
    """Deform `img` so that source landmarks move onto their targets.

    Backward mapping: the inverse-role transformation sends each output pixel
    center to a location in the input, which is sampled bilinearly.
    """
    t, _ = fit(invert_roles(pairs), kernel)
    src = map_point(t, pixel_centers(img.width, img.height))
    px = src[:, 0] * img.width - 0.5
    py = src[:, 1] * img.height - 0.5
    values = sample_bilinear(img.pixels, px, py)
    out = np.clip(np.rint(values), 0, img.maxval)
    return RasterImage(img.width, img.height, out.reshape(img.height, img.width), img.maxval)


def checkerboard(width: int = 128, height: int = 128, square: int = 16,
                 low: int = 0, high: int = 255) -> RasterImage:
    rows, cols = np.mgrid[0:height, 0:width]
    board = np.where(((rows // square) + (cols // square)) % 2 == 0, high, low)
    return RasterImage.from_array(board)
