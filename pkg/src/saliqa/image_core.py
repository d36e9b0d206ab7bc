"""Raster images, color conversion, Gaussian filtering and resampling.

All arithmetic is float64 on the [0, 1] scale. Images are ``(H, W, C)``
arrays wrapped in :class:`RasterImage`; every function also accepts a bare
ndarray of shape ``(H, W)`` or ``(H, W, C)``.
"""

import os
from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage

from ._validation import check_image, check_odd, check_positive
from .exceptions import FormatError, ParameterError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """An ``(H, W, C)`` float64 pixel grid with values in [0, 1].

    ``bit_depth_origin`` records whether the pixels were decoded from an 8-
    or 16-bit source, so that :func:`save_image` can write the same depth.
    """

    data: np.ndarray
    bit_depth_origin: int = 8

    def __post_init__(self):
        arr = check_image(self.data, "data")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.bit_depth_origin not in (8, 16):
            raise ParameterError(f"bit_depth_origin must be 8 or 16, got {self.bit_depth_origin}")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def with_data(self, data):
        return RasterImage(data, self.bit_depth_origin)


def as_raster(img):
    if isinstance(img, RasterImage):
        return img
    return RasterImage(img)


def load_image(path):
    """Decode an 8/16-bit grayscale or RGB raster (PNG, PGM/PPM, ...).

    Alpha channels are dropped. Values are divided by ``2**depth - 1``.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image file: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise OSError(f"cannot decode image file: {path}")
    if raw.dtype == np.uint8:
        depth = 8
    elif raw.dtype == np.uint16:
        depth = 16
    else:
        raise FormatError(f"unsupported sample type {raw.dtype} in {path}")

    if raw.ndim == 2:
        pixels = raw[:, :, None]
    elif raw.ndim == 3 and raw.shape[2] == 1:
        pixels = raw
    elif raw.ndim == 3 and raw.shape[2] == 2:
        pixels = raw[:, :, :1]
    elif raw.ndim == 3 and raw.shape[2] in (3, 4):
        pixels = raw[:, :, 2::-1]
    else:
        raise FormatError(f"unsupported channel layout {raw.shape} in {path}")

    data = pixels.astype(np.float64) / float(2**depth - 1)
    return RasterImage(data, bit_depth_origin=depth)


def save_image(img, path, bit_depth=None):
    """Write ``img`` as PNG (or any format cv2 infers from the suffix)."""
    img = as_raster(img)
    depth = bit_depth or img.bit_depth_origin
    if depth not in (8, 16):
        raise ParameterError(f"bit_depth must be 8 or 16, got {depth}")
    scale = float(2**depth - 1)
    dtype = np.uint8 if depth == 8 else np.uint16
    pixels = np.rint(img.data * scale).astype(dtype)
    if img.channels == 3:
        pixels = pixels[:, :, ::-1]
    else:
        pixels = pixels[:, :, 0]
    if not cv2.imwrite(os.fspath(path), np.ascontiguousarray(pixels)):
        raise OSError(f"cannot write image file: {path}")


def to_grayscale(img):
    """Rec.601 luma of an RGB image; 1-channel input is returned unchanged."""
    img = as_raster(img)
    if img.channels == 1:
        return img
    luma = img.data @ np.asarray(LUMA_WEIGHTS)
    return img.with_data(np.clip(luma, 0.0, 1.0)[:, :, None])


def gaussian_kernel1d(kernel_size, sigma):
    """Sampled Gaussian truncated to ``kernel_size`` taps, summing to 1."""
    kernel_size = check_odd(kernel_size, "kernel_size")
    sigma = check_positive(sigma, "sigma")
    radius = kernel_size // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def blur_array(arr, kernel_size, sigma):
    """Separable Gaussian blur of a 2-D or ``(H, W, C)`` float array.

    Unlike :func:`gaussian_blur` the input is not range-checked, so this is
    usable on raw saliency fields and intermediate SSIM statistics.
    """
    kernel = gaussian_kernel1d(kernel_size, sigma)
    out = np.asarray(arr, dtype=np.float64)
    if kernel.size == 1:
        return out.copy()
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return ndimage.correlate1d(out, kernel, axis=0, mode="nearest")


def gaussian_blur(img, kernel_size, sigma):
    """Blur each channel horizontally then vertically with edge replication."""
    img = as_raster(img)
    out = blur_array(img.data, kernel_size, sigma)
    return img.with_data(np.clip(out, 0.0, 1.0))


def resize_array(arr, new_width, new_height):
    """Bilinear resampling with half-pixel-centre alignment (no clamping)."""
    arr = np.asarray(arr, dtype=np.float64)
    if new_width < 1 or new_height < 1:
        raise ParameterError(f"target size must be >= 1x1, got {new_width}x{new_height}")
    h, w = arr.shape[:2]
    if (h, w) == (new_height, new_width):
        return arr.copy()

    def axis_weights(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, fy = axis_weights(h, new_height)
    x0, x1, fx = axis_weights(w, new_width)
    if arr.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    # a + (b - a) * t keeps constant regions exact
    top = arr[y0][:, x0] + (arr[y0][:, x1] - arr[y0][:, x0]) * fx
    bottom = arr[y1][:, x0] + (arr[y1][:, x1] - arr[y1][:, x0]) * fx
    return top + (bottom - top) * fy


def resize_bilinear(img, new_width, new_height):
    img = as_raster(img)
    out = resize_array(img.data, new_width, new_height)
    return img.with_data(np.clip(out, 0.0, 1.0))
