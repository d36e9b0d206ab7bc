"""Slow, literal reference implementations used only as test oracles.

None of these import from saliqa; they are written straight from the
textbook definitions with explicit loops.
"""

import itertools
import math
from fractions import Fraction

import numpy as np


def gaussian_taps(size, sigma):
    r = size // 2
    taps = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-r, r + 1)]
    total = sum(taps)
    return [t / total for t in taps]


def ssim_map_bruteforce(x, y, window=11, sigma=1.5, k1=0.01, k2=0.03, L=1.0):
    """Per-pixel SSIM evaluated window by window with edge-replicated borders."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    h, w = x.shape
    r = window // 2
    g = gaussian_taps(window, sigma)
    weights = np.outer(g, g)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    out = np.empty_like(x)
    for i in range(h):
        rows = [min(max(i + d, 0), h - 1) for d in range(-r, r + 1)]
        for j in range(w):
            cols = [min(max(j + d, 0), w - 1) for d in range(-r, r + 1)]
            px = x[np.ix_(rows, cols)]
            py = y[np.ix_(rows, cols)]
            mx = float(np.sum(weights * px))
            my = float(np.sum(weights * py))
            vx = float(np.sum(weights * (px - mx) ** 2))
            vy = float(np.sum(weights * (py - my) ** 2))
            cxy = float(np.sum(weights * (px - mx) * (py - my)))
            out[i, j] = ((2 * mx * my + c1) * (2 * cxy + c2)) / (
                (mx * mx + my * my + c1) * (vx + vy + c2)
            )
    return out


def average_ranks(values):
    """1-based ranks, tied values sharing the mean of their positions."""
    n = len(values)
    ranks = [0.0] * n
    for i in range(n):
        less = sum(1 for v in values if v < values[i])
        equal = sum(1 for v in values if v == values[i])
        ranks[i] = less + (equal + 1) / 2.0
    return ranks


def pearson_textbook(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman_oracle(x, y):
    return pearson_textbook(average_ranks(list(x)), average_ranks(list(y)))


def spearman_no_ties(x, y):
    """1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties."""
    rx, ry = average_ranks(list(x)), average_ranks(list(y))
    n = len(x)
    d2 = sum((a - b) ** 2 for a, b in zip(rx, ry))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def group_fraction_exact(preds, mos):
    """Concordant fraction over distinct-MOS pairs as an exact Fraction."""
    good, total = Fraction(0), 0
    for a, b in itertools.combinations(range(len(preds)), 2):
        if mos[a] == mos[b]:
            continue
        total += 1
        dp = preds[a] - preds[b]
        dm = mos[a] - mos[b]
        if dp == 0:
            good += Fraction(1, 2)
        elif (dp > 0) == (dm > 0):
            good += 1
    return None if total == 0 else good / total


def fraccp_oracle(groups):
    fracs = [group_fraction_exact(p, m) for p, m in groups]
    fracs = [f for f in fracs if f is not None]
    return sum(fracs, Fraction(0)) / len(fracs)


def gradcam_direct(features, gradients):
    """ReLU(sum_k alpha_k A_k) with alpha_k the mean gradient, by nested loops."""
    k_count = len(features)
    h = len(features[0])
    w = len(features[0][0])
    alphas = []
    for k in range(k_count):
        s = 0.0
        for i in range(h):
            for j in range(w):
                s += gradients[k][i][j]
        alphas.append(s / (h * w))
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            s = 0.0
            for k in range(k_count):
                s += alphas[k] * features[k][i][j]
            out[i, j] = max(s, 0.0)
    return out


def bt_grid_loglik(theta_diff_grid, wins_ab, wins_ba):
    """Two-item Bradley-Terry log-likelihood on a grid of strength gaps."""
    d = np.asarray(theta_diff_grid)
    p = 1.0 / (1.0 + np.exp(-d))
    return wins_ab * np.log(p) + wins_ba * np.log(1.0 - p)


def bt_loglik_oracle(scores, comparisons):
    """Log-likelihood of (winner, loser, weight) triples under log-strengths."""
    total = 0.0
    for winner, loser, weight in comparisons:
        d = scores[winner] - scores[loser]
        total += weight * -math.log1p(math.exp(-d))
    return total
