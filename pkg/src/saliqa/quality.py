"""Full-reference quality metrics and their saliency-weighted variants.

PSNR, SSIM and MS-SSIM operate on [0, 1] images. The saliency-weighted
versions (EW-PSNR, EW-SSIM) pool the per-pixel squared error or SSIM map
with saliency weights instead of a flat mean.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_image, check_map, check_odd, check_same_shape
from .exceptions import DegenerateMapError, ParameterError
from .image_core import blur_array, resize_array

DEFAULT_CAP_DB = 100.0
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        check_odd(self.window_size, "window_size", minimum=3)
        if not (self.window_sigma > 0 and self.k1 > 0 and self.k2 > 0 and self.dynamic_range > 0):
            raise ParameterError("window_sigma, k1, k2 and dynamic_range must all be > 0")

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2


@dataclass(frozen=True)
class QualityScore:
    metric_name: str
    value: float
    capped: bool = False

    def __float__(self):
        return float(self.value)


def _pair(ref, dist):
    a = check_image(ref, "ref")
    b = check_image(dist, "dist")
    check_same_shape(a, b, ("ref", "dist"))
    return a, b


def _gray_pair(ref, dist):
    a, b = _pair(ref, dist)
    if a.shape[2] != 1:
        raise ParameterError("SSIM expects grayscale input; convert with to_grayscale first")
    return a[:, :, 0], b[:, :, 0]


def _weights(sal, shape):
    w = check_map(sal, "sal")
    if w.shape != shape:
        w = resize_array(w, shape[1], shape[0])
    total = w.sum()
    if not total > 0:
        raise DegenerateMapError("saliency weights sum to zero")
    return w / total


def mse(ref, dist):
    a, b = _pair(ref, dist)
    return float(np.mean((a - b) ** 2))


def _psnr_from_mse(err, name, cap_db):
    if err == 0:
        return QualityScore(name, float(cap_db), capped=True)
    return QualityScore(name, 10.0 * math.log10(1.0 / err))


def psnr(ref, dist, cap_db=DEFAULT_CAP_DB):
    """PSNR in dB; identical images return ``cap_db`` with ``capped=True``."""
    return _psnr_from_mse(mse(ref, dist), "psnr", cap_db)


def ew_psnr(ref, dist, sal, cap_db=DEFAULT_CAP_DB):
    """PSNR of the saliency-weighted MSE.

    ``sal`` is resized to the image if needed; the per-pixel weight applies
    to every channel.
    """
    a, b = _pair(ref, dist)
    w = _weights(sal, a.shape[:2])
    err = float(np.sum(w * np.mean((a - b) ** 2, axis=2)))
    return _psnr_from_mse(err, "ew_psnr", cap_db)


def _ssim_terms(x, y, params):
    """Per-pixel luminance and contrast-structure terms of SSIM."""
    blur = lambda a: blur_array(a, params.window_size, params.window_sigma)  # noqa: E731
    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_x * mu_y
    c1, c2 = params.c1, params.c2
    lum = (2 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    cs = (2 * cov + c2) / (var_x + var_y + c2)
    return lum, cs


def ssim(ref, dist, params=None):
    """Mean SSIM and the full-size SSIM map of two grayscale images.

    Local statistics use a Gaussian window with edge replication, so the map
    has the same shape as the inputs.
    """
    params = params or SsimParams()
    x, y = _gray_pair(ref, dist)
    if min(x.shape) < params.window_size:
        raise ParameterError(
            f"image {x.shape[1]}x{x.shape[0]} is smaller than the {params.window_size}px window"
        )
    lum, cs = _ssim_terms(x, y, params)
    smap = lum * cs
    return float(smap.mean()), smap


def ew_ssim(ref, dist, sal, params=None):
    """SSIM map pooled with saliency weights."""
    _, smap = ssim(ref, dist, params)
    w = _weights(sal, smap.shape)
    return float(np.sum(w * smap))


def _downsample(a):
    h, w = (a.shape[0] // 2) * 2, (a.shape[1] // 2) * 2
    a = a[:h, :w]
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def ms_ssim(ref, dist, params=None, weights=MS_SSIM_WEIGHTS):
    """Multi-scale SSIM.

    Contrast-structure means at every scale but the last, full SSIM mean at
    the last, each raised to its weight. Negative per-scale terms are
    clipped to 0 before exponentiation.
    """
    params = params or SsimParams()
    x, y = _gray_pair(ref, dist)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.size == 0:
        raise ParameterError("weights must be a non-empty 1-D sequence")
    n_scales = weights.size
    min_side = params.window_size * 2 ** (n_scales - 1)
    if min(x.shape) < min_side:
        raise ParameterError(
            f"MS-SSIM with {n_scales} scales needs images of at least {min_side}x{min_side}, "
            f"got {x.shape[1]}x{x.shape[0]}"
        )
    terms = []
    for scale in range(n_scales):
        lum, cs = _ssim_terms(x, y, params)
        if scale == n_scales - 1:
            terms.append((lum * cs).mean())
        else:
            terms.append(cs.mean())
            x, y = _downsample(x), _downsample(y)
    terms = np.maximum(np.asarray(terms), 0.0)
    return float(np.prod(terms**weights))
