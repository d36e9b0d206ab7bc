"""Input validation helpers.

Every public function accepts either the package's container types
(:class:`~saliqa.image_core.RasterImage`, :class:`~saliqa.saliency.SaliencyMap`)
or plain array-likes. These helpers coerce to float64 ndarrays and enforce
the shape/range invariants once, so the numerical code can assume them.
"""

import numbers

import numpy as np

from .exceptions import DataError, ParameterError


def check_image(img, name="img"):
    """Return ``img`` as a float64 ``(H, W, C)`` array with C in {1, 3}."""
    data = getattr(img, "data", img)
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ParameterError(
            f"{name} must have shape (H, W) or (H, W, C) with C in {{1, 3}}, got {arr.shape}"
        )
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"{name} must be at least 1x1, got {arr.shape[:2]}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError(f"{name} values must lie in [0, 1]")
    return arr


def check_map(smap, name="map", allow_negative=False):
    """Return a saliency map as a float64 ``(H, W)`` array."""
    values = getattr(smap, "values", smap)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.size == 0:
        raise ParameterError(f"{name} must be a non-empty 2-D field, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if not allow_negative and arr.min() < 0.0:
        raise ParameterError(f"{name} must be nonnegative")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ParameterError(
            f"{names[0]} and {names[1]} must have equal shapes, got {a.shape} and {b.shape}"
        )


def check_odd(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum or value % 2 == 0:
        raise ParameterError(f"{name} must be an odd integer >= {minimum}, got {value!r}")
    return int(value)


def check_positive(value, name):
    if not value > 0:
        raise ParameterError(f"{name} must be > 0, got {value!r}")
    return float(value)


def check_fraction(value, name="fraction"):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value
