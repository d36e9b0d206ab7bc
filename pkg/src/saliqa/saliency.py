"""Saliency maps, normalizations, the center-prior baseline and agreement metrics.

The four agreement metrics follow the usual saliency-benchmark conventions:

* ``nss`` -- mean z-scored prediction at fixation locations,
* ``sim`` -- histogram intersection of probability-normalized maps,
* ``cc``  -- Pearson correlation of the flattened maps,
* ``kld`` -- KL divergence of the prediction from the ground truth.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_map, check_positive, check_same_shape
from .exceptions import DegenerateMapError, ParameterError, SchemaError

NORM_STATES = ("raw", "minmax", "probability", "zscore")
KLD_EPSILON = 1e-7


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """A 2-D saliency (or explanation) field and its normalization state."""

    values: np.ndarray
    norm_state: str = "raw"

    def __post_init__(self):
        if self.norm_state not in NORM_STATES:
            raise ParameterError(f"unknown norm_state {self.norm_state!r}")
        arr = check_map(self.values, "values", allow_negative=self.norm_state == "zscore")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class FixationSet:
    """Integer gaze locations ``(x, y)`` inside a ``frame_width x frame_height`` frame."""

    points: tuple
    frame_width: int
    frame_height: int

    def __post_init__(self):
        pts = tuple((int(x), int(y)) for x, y in self.points)
        for x, y in pts:
            if not (0 <= x < self.frame_width and 0 <= y < self.frame_height):
                raise ParameterError(
                    f"fixation ({x}, {y}) outside {self.frame_width}x{self.frame_height} frame"
                )
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_mask(cls, mask):
        """Fixations at every nonzero pixel of a binary fixation map."""
        mask = np.asarray(mask)
        ys, xs = np.nonzero(mask)
        return cls(tuple(zip(xs.tolist(), ys.tolist())), mask.shape[1], mask.shape[0])


def load_fixations(path, frame_width, frame_height):
    """Read a ``x,y`` CSV of integer pixel coordinates."""
    with open(os.fspath(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise SchemaError(f"fixation file {path} must have header 'x,y'")
        points = [(int(row["x"]), int(row["y"])) for row in reader]
    return FixationSet(tuple(points), frame_width, frame_height)


def _values(smap, name="map"):
    return check_map(smap, name, allow_negative=getattr(smap, "norm_state", "") == "zscore")


def normalize(smap, mode):
    """Return ``smap`` rescaled by ``mode`` (``minmax``, ``probability`` or ``zscore``)."""
    v = _values(smap)
    if mode == "minmax":
        lo, hi = v.min(), v.max()
        if hi == lo:
            raise DegenerateMapError("cannot min-max normalize a constant map")
        out = (v - lo) / (hi - lo)
    elif mode == "probability":
        total = v.sum()
        if not total > 0:
            raise DegenerateMapError("cannot probability-normalize a map with zero sum")
        out = v / total
    elif mode == "zscore":
        std = v.std()
        if std == 0:
            raise DegenerateMapError("cannot z-score a constant map")
        out = (v - v.mean()) / std
    else:
        raise ParameterError(f"unknown normalization mode {mode!r}")
    return SaliencyMap(out, mode)


def center_prior(width, height, sigma_frac=0.25):
    """Centered anisotropic Gaussian baseline, probability-normalized.

    The standard deviations scale with the frame: ``sigma_frac * width``
    horizontally and ``sigma_frac * height`` vertically.
    """
    sigma_frac = check_positive(sigma_frac, "sigma_frac")
    if width < 1 or height < 1:
        raise ParameterError(f"frame must be at least 1x1, got {width}x{height}")
    x = (np.arange(width) - (width - 1) / 2.0) / (sigma_frac * width)
    y = (np.arange(height) - (height - 1) / 2.0) / (sigma_frac * height)
    field = np.exp(-0.5 * y[:, None] ** 2) * np.exp(-0.5 * x[None, :] ** 2)
    return SaliencyMap(field / field.sum(), "probability")


def map_transform(smap, reference_histogram):
    """Rank-preserving histogram matching onto ``reference_histogram``.

    Pixel of rank ``r`` (out of ``n``) receives the reference quantile at
    ``r / (n - 1)``, interpolated linearly in the sorted reference. Tied
    pixels share the mean of the targets of their ranks.
    """
    v = _values(smap)
    ref = np.sort(np.asarray(reference_histogram, dtype=np.float64).ravel())
    if ref.size == 0:
        raise ParameterError("reference_histogram must be non-empty")
    flat = v.ravel()
    n = flat.size
    order = np.argsort(flat, kind="stable")
    pos = np.arange(n) / (n - 1) * (ref.size - 1) if n > 1 else np.zeros(1)
    targets = np.interp(pos, np.arange(ref.size), ref)

    # average the targets over runs of equal values
    sorted_vals = flat[order]
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    sums = np.add.reduceat(targets, starts)
    counts = np.diff(np.r_[starts, n])
    # rounding in the tie means must not break monotonicity
    targets = np.maximum.accumulate(np.repeat(sums / counts, counts))

    out = np.empty(n)
    out[order] = targets
    return SaliencyMap(out.reshape(v.shape), "raw" if ref.min() >= 0 else "zscore")


class HistogramMatcher(TransformerMixin, BaseEstimator):
    """Estimator form of :func:`map_transform`.

    ``fit`` pools the values of one or more reference maps into the target
    histogram; ``transform`` matches each input map onto it.

    Parameters
    ----------
    max_samples : int or None
        If set, the pooled reference is thinned to this many evenly spaced
        order statistics, which keeps memory bounded for large datasets.
    """

    def __init__(self, max_samples=None):
        self.max_samples = max_samples

    def fit(self, X, y=None):
        maps = [X] if isinstance(X, SaliencyMap) or np.ndim(X) == 2 else list(X)
        if not maps:
            raise ParameterError("need at least one reference map")
        pooled = np.sort(np.concatenate([_values(m).ravel() for m in maps]))
        if self.max_samples is not None and pooled.size > self.max_samples:
            idx = np.linspace(0, pooled.size - 1, int(self.max_samples))
            pooled = np.interp(idx, np.arange(pooled.size), pooled)
        self.reference_ = pooled
        return self

    def transform(self, X):
        check_is_fitted(self, "reference_")
        if isinstance(X, SaliencyMap) or np.ndim(X) == 2:
            return map_transform(X, self.reference_)
        return [map_transform(m, self.reference_) for m in X]


def nss(pred, fixations):
    """Normalized scanpath saliency: mean z-scored ``pred`` at the fixations."""
    v = _values(pred, "pred")
    if not isinstance(fixations, FixationSet):
        fixations = FixationSet.from_mask(fixations)
    if len(fixations) == 0:
        raise ParameterError("NSS needs at least one fixation")
    if (fixations.frame_height, fixations.frame_width) != v.shape:
        raise ParameterError(
            f"fixation frame {fixations.frame_width}x{fixations.frame_height} does not match "
            f"map {v.shape[1]}x{v.shape[0]}; resize the map first"
        )
    z = normalize(v, "zscore").values
    xs, ys = np.array(fixations.points).T
    return float(z[ys, xs].mean())


def sim(pred, gt):
    """Histogram intersection of the two probability-normalized maps."""
    p, q = _values(pred, "pred"), _values(gt, "gt")
    check_same_shape(p, q, ("pred", "gt"))
    p = normalize(p, "probability").values
    q = normalize(q, "probability").values
    return float(np.minimum(p, q).sum())


def cc(pred, gt):
    """Pearson linear correlation of the flattened maps."""
    p, q = _values(pred, "pred"), _values(gt, "gt")
    check_same_shape(p, q, ("pred", "gt"))
    if p.std() == 0 or q.std() == 0:
        raise DegenerateMapError("CC is undefined for a constant map")
    return float(sps.pearsonr(p.ravel(), q.ravel())[0])


def kld(pred, gt, epsilon=KLD_EPSILON):
    """KL divergence ``sum gt * ln(gt / (pred + eps) + eps)`` of probability maps."""
    p, q = _values(pred, "pred"), _values(gt, "gt")
    check_same_shape(p, q, ("pred", "gt"))
    p = normalize(p, "probability").values
    q = normalize(q, "probability").values
    return float(np.sum(q * np.log(q / (p + epsilon) + epsilon)))
