"""MoRF / LeRF masking of images by explanation maps.

An explanation map is blurred (to break plateaus so that every quantile has
a well-defined threshold), thresholded at order statistics, and image pixels
on the relevant side of the threshold are replaced by a fill colour.

* MoRF (most relevant first) masks pixels with map value ``> t``.
* LeRF (least relevant first) masks pixels with map value ``< t``.
"""

import csv
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_fraction, check_map, check_odd, check_positive
from .exceptions import ParameterError
from .image_core import LUMA_WEIGHTS, as_raster, blur_array
from .saliency import SaliencyMap

STRATEGIES = ("morf", "lerf")
IMAGENET_MEAN = (0.485, 0.456, 0.406)
DEFAULT_QUANTILES = tuple(round(0.1 * i, 1) for i in range(10)) + (1.0,)


def _strategy(strategy):
    s = str(strategy).lower()
    if s not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; use 'morf' or 'lerf'")
    return s


@dataclass(frozen=True)
class MaskingSpec:
    strategy: str = "morf"
    fill: str = "black"
    fill_values: tuple = IMAGENET_MEAN
    quantiles: tuple = DEFAULT_QUANTILES
    blur_kernel: int = 101
    blur_sigma: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "strategy", _strategy(self.strategy))
        if self.fill not in ("black", "mean"):
            raise ParameterError(f"fill must be 'black' or 'mean', got {self.fill!r}")
        q = tuple(check_fraction(v, "quantile") for v in self.quantiles)
        if not q or any(b <= a for a, b in zip(q, q[1:])):
            raise ParameterError("quantiles must be a non-empty strictly increasing list")
        object.__setattr__(self, "quantiles", q)
        if len(self.fill_values) != 3:
            raise ParameterError("fill_values needs one constant per RGB channel")
        check_odd(self.blur_kernel, "blur_kernel")
        check_positive(self.blur_sigma, "blur_sigma")

    def fill_color(self, channels):
        if self.fill == "black":
            return np.zeros(channels)
        rgb = np.asarray(self.fill_values, dtype=np.float64)
        if channels == 1:
            return np.array([rgb @ np.asarray(LUMA_WEIGHTS)])
        return rgb


@dataclass(frozen=True)
class PerturbationCurve:
    """Scores of masked inputs against the requested masking fractions."""

    quantiles: tuple
    scores: tuple
    baseline: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.quantiles) != len(self.scores):
            raise ParameterError(
                f"{len(self.quantiles)} quantiles but {len(self.scores)} scores"
            )
        for q in self.quantiles:
            check_fraction(q, "quantile")


class MaskedImage(NamedTuple):
    fraction: float
    actual_fraction: float
    image: object


def prepare_map(smap, spec):
    """Blur the map with the spec's kernel so that thresholds resolve ties."""
    v = check_map(smap, "map")
    return SaliencyMap(blur_array(v, spec.blur_kernel, spec.blur_sigma), "raw")


def masked_count(n, fraction, strategy):
    """Number of pixels to mask out of ``n``.

    MoRF rounds halves up and LeRF rounds them down, so that
    ``masked_count(n, f, "morf") + masked_count(n, 1 - f, "lerf") == n``.
    """
    x = check_fraction(fraction) * n
    if _strategy(strategy) == "morf":
        k = math.floor(x + 0.5)
    else:
        k = math.ceil(x - 0.5)
    return min(max(k, 0), n)


def threshold_for_fraction(smap, fraction, strategy):
    """Threshold whose strict-inequality mask covers ``fraction`` of the pixels."""
    strategy = _strategy(strategy)
    s = np.sort(check_map(smap, "map").ravel())
    n = s.size
    k = masked_count(n, fraction, strategy)
    if strategy == "morf":
        if k == n:
            return float(np.nextafter(s[0], -np.inf))
        return float(s[n - k - 1])
    if k == n:
        return float(np.nextafter(s[-1], np.inf))
    return float(s[k])


def mask_for_threshold(smap, threshold, strategy):
    v = check_map(smap, "map")
    if _strategy(strategy) == "morf":
        return v > threshold
    return v < threshold


def apply_mask(img, smap, threshold, strategy, fill="black", fill_values=IMAGENET_MEAN):
    """Replace pixels on the masked side of ``threshold`` with a fill colour.

    Unmasked pixels are copied unchanged.
    """
    img = as_raster(img)
    mask = mask_for_threshold(smap, threshold, strategy)
    if mask.shape != img.data.shape[:2]:
        raise ParameterError(
            f"map {mask.shape[1]}x{mask.shape[0]} does not match image {img.width}x{img.height}"
        )
    color = MaskingSpec(fill=fill, fill_values=tuple(fill_values)).fill_color(img.channels)
    out = img.data.copy()
    out[mask] = color
    return img.with_data(out)


def masking_series(img, smap, spec):
    """Masked copies of ``img`` for every quantile in ``spec``, in order.

    Each entry reports the requested fraction and the fraction actually
    masked after tie effects.
    """
    img = as_raster(img)
    prepared = prepare_map(smap, spec)
    if prepared.values.shape != img.data.shape[:2]:
        raise ParameterError("map dimensions must equal image dimensions; resize the map first")
    n = prepared.values.size
    series = []
    for fraction in spec.quantiles:
        t = threshold_for_fraction(prepared, fraction, spec.strategy)
        mask = mask_for_threshold(prepared, t, spec.strategy)
        out = img.data.copy()
        out[mask] = spec.fill_color(img.channels)
        series.append(MaskedImage(fraction, mask.sum() / n, img.with_data(out)))
    return series


def aopc(curve):
    """Area over the perturbation curve: mean drop from the baseline score."""
    if len(curve.scores) < 1:
        raise ParameterError("a perturbation curve needs a baseline and at least one point")
    drops = curve.baseline - np.asarray(curve.scores, dtype=np.float64)
    return float(drops.mean())


def masked_name(stem, strategy, fraction, fill):
    """File name for a masked image, joinable back by external scorers."""
    return f"{stem}__{_strategy(strategy)}__f{round(fraction * 100):03d}__{fill}.png"


def read_curve(path):
    """Parse a ``fraction,score`` CSV; the fraction-0 (or ``baseline``) row is the baseline."""
    baseline, fractions, scores = None, [], []
    with open(os.fspath(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if not {"fraction", "score"} <= set(reader.fieldnames or []):
            raise ParameterError(f"{path}: curve CSV needs header 'fraction,score'")
        for row in reader:
            label = row["fraction"].strip().lower()
            score = float(row["score"])
            if label == "baseline" or float(label) == 0.0:
                if baseline is not None:
                    raise ParameterError(f"{path}: more than one baseline row")
                baseline = score
            else:
                fractions.append(float(label))
                scores.append(score)
    if baseline is None:
        raise ParameterError(f"{path}: no baseline row at fraction 0")
    return PerturbationCurve(tuple(fractions), tuple(scores), baseline)
