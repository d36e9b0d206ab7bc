"""Pairwise votes to per-image subjective scores.

Votes come from crowdsourced left/right/tie judgments, with a few
verification pairs of known answer per session. Sessions failing any
verification pair are discarded; the remaining votes are aggregated with a
Bradley-Terry model fitted by minorization-maximization, with ties counted
as half a win for each side.
"""

import csv
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import GraphError, ParameterError, SchemaError

OUTCOMES = ("left", "right", "tie")
VOTE_COLUMNS = ("session_id", "left_id", "right_id", "outcome", "is_verification", "expected_outcome")
_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


@dataclass(frozen=True)
class VoteRecord:
    session_id: str
    left_id: str
    right_id: str
    outcome: str
    is_verification: bool = False
    expected_outcome: str = None

    def __post_init__(self):
        if self.left_id == self.right_id:
            raise ParameterError(f"vote compares {self.left_id!r} with itself")
        if self.outcome not in OUTCOMES:
            raise ParameterError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")
        if self.is_verification and self.expected_outcome not in OUTCOMES:
            raise ParameterError("verification votes need an expected_outcome")

    def swapped(self):
        """Same judgment with the two sides exchanged."""
        flip = {"left": "right", "right": "left", "tie": "tie", None: None}
        return VoteRecord(
            self.session_id, self.right_id, self.left_id, flip[self.outcome],
            self.is_verification, flip[self.expected_outcome],
        )


@dataclass
class SubjectiveScores:
    scores: dict
    iterations: int
    converged: bool
    degenerate: list = field(default_factory=list)
    log_likelihood: list = field(default_factory=list)


def _flag(text):
    value = str(text).strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ParameterError(f"cannot read {text!r} as a boolean flag")


def load_votes(path):
    with open(os.fspath(path), newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in VOTE_COLUMNS[:4] if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        votes = []
        for row in reader:
            expected = (row.get("expected_outcome") or "").strip().lower() or None
            votes.append(VoteRecord(
                row["session_id"].strip(),
                row["left_id"].strip(),
                row["right_id"].strip(),
                row["outcome"].strip().lower(),
                _flag(row.get("is_verification", "")),
                expected,
            ))
    return votes


def write_scores(result, path):
    with open(os.fspath(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "score"])
        for image_id, score in result.scores.items():
            writer.writerow([image_id, f"{score:.6f}"])


def filter_sessions(votes):
    """Drop every session that got any verification pair wrong.

    Returns ``(kept, rejected_sessions)``; verification votes themselves are
    never part of ``kept``. A tie on a pair with a definite expected answer
    counts as wrong.
    """
    votes = list(votes)
    rejected = []
    for v in votes:
        if v.is_verification and v.outcome != v.expected_outcome and v.session_id not in rejected:
            rejected.append(v.session_id)
    bad = set(rejected)
    kept = [v for v in votes if not v.is_verification and v.session_id not in bad]
    return kept, rejected


def _win_matrix(votes):
    items = sorted({v.left_id for v in votes} | {v.right_id for v in votes})
    index = {item: i for i, item in enumerate(items)}
    wins = np.zeros((len(items), len(items)))
    for v in votes:
        i, j = index[v.left_id], index[v.right_id]
        if v.outcome == "left":
            wins[i, j] += 1.0
        elif v.outcome == "right":
            wins[j, i] += 1.0
        else:
            wins[i, j] += 0.5
            wins[j, i] += 0.5
    return items, wins


def _components(adjacency):
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        comp, queue = [], deque([start])
        while queue:
            node = queue.popleft()
            comp.append(node)
            for nb in np.flatnonzero(adjacency[node] & ~seen):
                seen[nb] = True
                queue.append(nb)
        comps.append(sorted(comp))
    return comps


def log_likelihood(log_strengths, wins):
    """Tie-split Bradley-Terry log-likelihood of a win matrix."""
    s = np.asarray(log_strengths, dtype=np.float64)
    diff = s[:, None] - s[None, :]
    # log sigmoid(diff), computed stably
    log_p = -np.logaddexp(0.0, -diff)
    return float(np.sum(wins * log_p))


def _fit_mm(wins, tol, max_iter, clip):
    n = wins.shape[0]
    games = wins + wins.T
    won = wins.sum(axis=1)
    played = games.sum(axis=1)
    degenerate = np.flatnonzero((won == 0) | (won == played))

    logp = np.zeros(n)
    history = [log_likelihood(logp, wins)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = np.exp(logp)
        denom = (games / (p[:, None] + p[None, :])).sum(axis=1)
        with np.errstate(divide="ignore"):
            new = np.log(won / denom)
        new = np.clip(new - new[np.isfinite(new)].mean(), -clip, clip)
        new -= new.mean()
        delta = np.max(np.abs(new - logp))
        logp = new
        history.append(log_likelihood(logp, wins))
        if delta < tol:
            converged = True
            break
    return logp, iterations, converged, degenerate, history


def bradley_terry(votes, tol=1e-9, max_iter=10000, clip=30.0):
    """Maximum-likelihood Bradley-Terry log-strengths, centred to sum to zero.

    Raises :class:`GraphError` if the comparison graph is disconnected.
    Items that never lose (or never win) have no finite MLE; their scores
    are clamped at ``+-clip`` and listed in ``degenerate``.
    """
    votes = list(votes)
    if not votes:
        raise ParameterError("no votes to aggregate")
    items, wins = _win_matrix(votes)
    comps = _components((wins + wins.T) > 0)
    if len(comps) > 1:
        named = [[items[i] for i in c] for c in comps]
        raise GraphError(
            f"comparison graph has {len(comps)} disconnected components: {named}", named
        )
    logp, iterations, converged, degenerate, history = _fit_mm(wins, tol, max_iter, clip)
    return SubjectiveScores(
        scores={item: float(s) for item, s in zip(items, logp)},
        iterations=iterations,
        converged=converged,
        degenerate=[items[i] for i in degenerate],
        log_likelihood=history,
    )


class BradleyTerry(BaseEstimator):
    """Estimator wrapper around :func:`bradley_terry`.

    ``fit`` takes a list of :class:`VoteRecord`; after fitting,
    ``scores_`` maps image id to log-strength and :meth:`predict_proba`
    gives the probability that the left item of each pair is preferred.

    Parameters
    ----------
    tol : float
        Stop when no log-strength moves by more than this between sweeps.
    max_iter : int
        Iteration cap; ``converged_`` is False if it is reached.
    clip : float
        Bound on log-strengths of items that never win or never lose.
    filter_verification : bool
        Run :func:`filter_sessions` before fitting.
    """

    def __init__(self, tol=1e-9, max_iter=10000, clip=30.0, filter_verification=True):
        self.tol = tol
        self.max_iter = max_iter
        self.clip = clip
        self.filter_verification = filter_verification

    def fit(self, X, y=None):
        votes = list(X)
        self.rejected_sessions_ = []
        if self.filter_verification:
            votes, self.rejected_sessions_ = filter_sessions(votes)
        result = bradley_terry(votes, tol=self.tol, max_iter=self.max_iter, clip=self.clip)
        self.scores_ = result.scores
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.degenerate_ = result.degenerate
        self.log_likelihood_ = result.log_likelihood
        return self

    def predict_proba(self, pairs):
        check_is_fitted(self, "scores_")
        out = []
        for left, right in pairs:
            d = self.scores_[left] - self.scores_[right]
            out.append(1.0 / (1.0 + np.exp(-d)))
        return np.asarray(out)
