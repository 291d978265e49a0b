"""Rank statistics, correlations, least squares R^2 and the paired bootstrap."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


class OneClassOnly(ValueError):
    pass


class DegenerateVariance(ValueError):
    pass


class SingularDesign(ValueError):
    pass


class EmptySample(ValueError):
    pass


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Mann-Whitney U counting a-over-b wins, ties worth one half."""
    ranks = rankdata(np.concatenate([a, b]))
    return float(ranks[: len(a)].sum() - len(a) * (len(a) + 1) / 2.0)


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability that a random positive outscores a random negative (ties count half)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos, neg = scores[labels], scores[~labels]
    if len(pos) == 0 or len(neg) == 0:
        raise OneClassOnly("AUC needs at least one positive and one negative label")
    return _u_statistic(pos, neg) / (len(pos) * len(neg))


def mann_whitney_rank_biserial(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise EmptySample("both samples must be nonempty")
    return 2.0 * _u_statistic(a, b) / (len(a) * len(b)) - 1.0


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or len(x) < 2:
        raise ValueError("pearson needs two equal-length samples of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise DegenerateVariance("zero variance in an input")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    return pearson(rankdata(x), rankdata(y))


def ols_r2(features, target: Sequence[float]) -> float:
    """R^2 of a least-squares fit with intercept."""
    return _ols(features, target)[0]


def ols_fitted(features, target: Sequence[float]) -> np.ndarray:
    return _ols(features, target)[1]


def _ols(features, target):
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(target, dtype=float)
    n, k = x.shape
    if len(y) != n:
        raise ValueError("feature rows and target differ in length")
    if n < k + 2:
        raise SingularDesign(f"{n} rows cannot support {k} features plus intercept")
    design = np.column_stack([np.ones(n), x])
    if np.linalg.matrix_rank(design) < k + 1:
        raise SingularDesign("feature columns are linearly dependent or constant")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise DegenerateVariance("target is constant")
    ss_res = float(((y - fitted) ** 2).sum())
    return 1.0 - ss_res / ss_tot, fitted


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    lo95: float
    hi95: float

    def excludes_zero(self) -> bool:
        return self.lo95 > 0 or self.hi95 < 0


def _nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    idx = max(int(np.ceil(q * len(sorted_values))) - 1, 0)
    return float(sorted_values[idx])


def paired_bootstrap_mean_ci(diffs: Sequence[float], resamples: int = 10_000, seed: int = 0) -> BootstrapCI:
    """Percentile CI (nearest rank) for the mean of paired differences."""
    diffs = np.asarray(diffs, dtype=float)
    if len(diffs) == 0:
        raise EmptySample("no differences to resample")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(diffs), size=(resamples, len(diffs)))
    means = np.sort(diffs[idx].mean(axis=1))
    return BootstrapCI(float(diffs.mean()), _nearest_rank(means, 0.025), _nearest_rank(means, 0.975))
