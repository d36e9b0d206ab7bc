"""Correlation statistics used to compare quality metrics with subjective scores."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateMapError, ParameterError


@dataclass(frozen=True)
class ScoredGroup:
    """Metric predictions and subjective scores for versions of one source image."""

    group_id: str
    predictions: tuple
    mos: tuple

    def __post_init__(self):
        if len(self.predictions) != len(self.mos):
            raise ParameterError(f"group {self.group_id}: predictions and mos differ in length")


def _paired(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ParameterError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ParameterError(f"need at least 3 paired values, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateMapError("correlation is undefined for a constant vector")
    return x, y


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    r = np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    return float(min(1.0, max(-1.0, r)))


def plcc(x, y):
    """Pearson linear correlation (no logistic pre-mapping)."""
    return _pearson(*_paired(x, y))


def srocc(x, y):
    """Spearman rank correlation with average ranks for ties."""
    x, y = _paired(x, y)
    return _pearson(rankdata(x), rankdata(y))


def _concordance_ratio(predictions, mos):
    p = np.asarray(predictions, dtype=np.float64)
    m = np.asarray(mos, dtype=np.float64)
    i, j = np.triu_indices(p.size, k=1)
    sign_m = np.sign(m[i] - m[j])
    keep = sign_m != 0
    if not keep.any():
        return None
    sign_p = np.sign(p[i] - p[j])[keep]
    sign_m = sign_m[keep]
    # counted in half-pairs so the ratio stays an exact rational
    halves = 2 * np.count_nonzero(sign_p == sign_m) + np.count_nonzero(sign_p == 0)
    return Fraction(int(halves), 2 * int(keep.sum()))


def group_concordance(predictions, mos):
    """Concordant fraction over pairs with distinct MOS, or None if none exist.

    Prediction ties count as half a concordant pair.
    """
    ratio = _concordance_ratio(predictions, mos)
    return None if ratio is None else float(ratio)


def fraccp(groups):
    """Fraction of concordant pairs, averaged with equal weight over groups.

    Groups whose MOS values are all equal carry no ordering and are skipped.
    The mean is taken over exact per-group ratios and rounded once.
    """
    ratios = [_concordance_ratio(g.predictions, g.mos) for g in groups]
    ratios = [r for r in ratios if r is not None]
    if not ratios:
        raise DegenerateMapError("no group has a pair with distinct subjective scores")
    return float(sum(ratios, Fraction(0)) / len(ratios))


def make_groups(group_ids, predictions, mos):
    """Bucket flat columns into :class:`ScoredGroup` objects, in first-seen order."""
    buckets = {}
    for gid, p, m in zip(group_ids, predictions, mos):
        preds, scores = buckets.setdefault(gid, ([], []))
        preds.append(float(p))
        scores.append(float(m))
    return [ScoredGroup(gid, tuple(p), tuple(m)) for gid, (p, m) in buckets.items()]
