"""Explanation maps from exported feature and gradient tensors.

Nothing here runs a network. Feature activations ``A`` (K x H x W) and the
gradients of the model output with respect to them are produced elsewhere
and read from ``.ftns`` files; this module only does the arithmetic.
"""

import os
import struct

import numpy as np

from .exceptions import DataError, DegenerateMapError, FormatError, ParameterError
from .saliency import SaliencyMap

FTNS_MAGIC = b"FTNS"
FTNS_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def check_tensor(tensor, name="features"):
    """Return ``tensor`` as a finite float64 ``(K, H, W)`` array."""
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ParameterError(f"{name} must have shape (K, H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite values")
    return arr


def read_tensor(path):
    """Read a little-endian ``FTNS`` v1 tensor file into a float64 array."""
    with open(os.fspath(path), "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, k, h, w = _HEADER.unpack(header)
        if magic != FTNS_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != FTNS_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        payload = np.frombuffer(fh.read(), dtype="<f4")
    if payload.size != k * h * w:
        raise FormatError(f"{path}: expected {k * h * w} values, found {payload.size}")
    return payload.astype(np.float64).reshape(k, h, w)


def write_tensor(tensor, path):
    arr = check_tensor(tensor)
    k, h, w = arr.shape
    with open(os.fspath(path), "wb") as fh:
        fh.write(_HEADER.pack(FTNS_MAGIC, FTNS_VERSION, k, h, w))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def channel_weights(gradients):
    """Spatially averaged gradient per channel (the GradCAM ``alpha_k``)."""
    g = check_tensor(gradients, "gradients")
    return g.mean(axis=(1, 2))


def gradcam_combine(features, gradients, relu_output=True, mode="weighted"):
    """Combine feature channels into a class-activation map.

    ``mode="weighted"`` is GradCAM: channels are summed with weights equal
    to their spatially averaged gradients. ``mode="elementwise"`` is the
    HiResCAM variant, summing ``gradients * features`` per cell. The weights
    are plain constants, i.e. treated as detached from any graph.

    With ``relu_output=False`` the signed field is returned as a bare
    ``(H, W)`` ndarray, since it is not a valid saliency map.
    """
    a = check_tensor(features, "features")
    g = check_tensor(gradients, "gradients")
    if a.shape != g.shape:
        raise ParameterError(f"features {a.shape} and gradients {g.shape} differ in shape")
    if mode == "weighted":
        cam = np.tensordot(channel_weights(g), a, axes=1)
    elif mode == "elementwise":
        cam = np.sum(g * a, axis=0)
    else:
        raise ParameterError(f"unknown mode {mode!r}; use 'weighted' or 'elementwise'")
    if not relu_output:
        return cam
    return SaliencyMap(np.maximum(cam, 0.0), "raw")


def rank_one_approximation(matrix):
    """Leading singular triplet ``(sigma, u, v)`` of a dense matrix.

    Computed from the eigendecomposition of the smaller Gram matrix, which
    for feature tensors is the K x K channel covariance.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ParameterError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.any(m):
        raise DegenerateMapError("cannot decompose an all-zero matrix")
    if m.shape[0] <= m.shape[1]:
        evals, evecs = np.linalg.eigh(m @ m.T)
        u = evecs[:, -1]
        v = m.T @ u
        sigma = np.linalg.norm(v)
        v = v / sigma
    else:
        evals, evecs = np.linalg.eigh(m.T @ m)
        v = evecs[:, -1]
        u = m @ v
        sigma = np.linalg.norm(u)
        u = u / sigma
    return float(sigma), u, v


def svd_first_component(features):
    """First principal spatial component of the channel-flattened features.

    The ``K x (H*W)`` matrix is reduced to its best rank-1 approximation and
    the right singular vector, scaled by the leading singular value, is
    returned as an ``H x W`` map. Sign is fixed so the map sums to a
    nonnegative value; remaining negative cells are clamped to 0.
    """
    a = check_tensor(features, "features")
    k, h, w = a.shape
    if not np.any(a):
        raise DegenerateMapError("cannot decompose an all-zero feature tensor")
    sigma, _, v = rank_one_approximation(a.reshape(k, h * w))
    component = sigma * v
    if component.sum() < 0:
        component = -component
    return SaliencyMap(np.maximum(component, 0.0).reshape(h, w), "raw")


def aggregate_maps(maps):
    """Element-wise mean of pre-aligned maps from repeated passes."""
    maps = list(maps)
    if not maps:
        raise ParameterError("aggregate_maps needs at least one map")
    arrays = [np.asarray(getattr(m, "values", m), dtype=np.float64) for m in maps]
    shape = arrays[0].shape
    for arr in arrays[1:]:
        if arr.shape != shape:
            raise ParameterError(f"map shapes differ: {shape} vs {arr.shape}")
    return SaliencyMap(np.mean(arrays, axis=0), "raw")
