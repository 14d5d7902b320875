"""Common-residue estimation: outlier trimming and maximum-likelihood means.

Residue errors of set ``l`` are modelled as wrapped normal with variance
``variances[l]``; each set is weighted by the inverse of its variance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInput, InputError, TooFewSurvivors
from .modular import TOL, circle_distance, wrap


@dataclass(frozen=True)
class NoiseModel:
    variances: tuple[float, ...]

    def __post_init__(self):
        if any(not v > 0 for v in self.variances):
            raise InputError(f"variances must be positive, got {self.variances}")

    @classmethod
    def uniform(cls, L: int) -> "NoiseModel":
        return cls((1.0,) * L)

    def weight(self, label: int) -> float:
        return 1.0 / self.variances[label]


@dataclass(frozen=True)
class TrimmedSet:
    """Retained ``(label, value)`` pairs after trimming, in input order."""

    labels: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def H(self) -> frozenset[int]:
        return frozenset(self.labels)

    @property
    def spread(self) -> float:
        return max(self.values) - min(self.values) if self.values else 0.0


def window_mask(values: Sequence[float], width: float, K: int) -> np.ndarray:
    """Flag the values lying in some window ``[y, y + width]`` that holds ``K`` values.

    A qualifying window can always be slid until one of its ends touches a
    value, so only windows anchored at a value on either side are checked.
    """
    x = np.asarray(values, dtype=float)
    keep = np.zeros(x.size, dtype=bool)
    for a in x:
        for lo in (a, a - width):
            inside = (x >= lo - TOL) & (x <= lo + width + TOL)
            if inside.sum() >= K:
                keep |= inside
    return keep


def trim_outliers(values: Sequence[tuple[int, float]], delta: float, K: int) -> TrimmedSet:
    """Drop every value that lies in no window ``[y, y + 2*delta]`` holding ``K`` values."""
    if not values:
        raise EmptyInput("no values to trim")
    keep = window_mask([v for _, v in values], 2 * delta, K)
    kept = [pair for pair, k in zip(values, keep) if k]
    if len(kept) < K:
        raise TooFewSurvivors(f"only {len(kept)} values survive trimming, need {K}")
    return TrimmedSet(tuple(l for l, _ in kept), tuple(float(v) for _, v in kept))


def _weights(labels: Sequence[int], variances: NoiseModel | Mapping[int, float] | None) -> np.ndarray:
    if variances is None:
        return np.ones(len(labels))
    if isinstance(variances, NoiseModel):
        return np.array([variances.weight(l) for l in labels])
    return np.array([1.0 / variances[l] for l in labels])


def mle_closed_form(trimmed: TrimmedSet,
                    variances: NoiseModel | Mapping[int, float] | None = None) -> float:
    """Inverse-variance weighted mean of the retained values.

    This minimizes the weighted squared deviation over ``[min, max]`` of the
    values; the clip only guards against rounding.
    """
    if not trimmed.values:
        raise EmptyInput("trimmed set is empty")
    w = _weights(trimmed.labels, variances)
    v = np.asarray(trimmed.values, dtype=float)
    x = float(np.dot(w, v) / w.sum())
    return min(max(x, float(v.min())), float(v.max()))


def circular_objective(x: float, values: Sequence[float], weights: Sequence[float], Gamma: float) -> float:
    return float(sum(w * circle_distance(v, x, Gamma) ** 2 for v, w in zip(values, weights)))


def mle_circular(values: Sequence[float],
                 variances: NoiseModel | Mapping[int, float] | Sequence[float] | None,
                 Gamma: float,
                 labels: Sequence[int] | None = None) -> float:
    """Weighted circular least-squares location of ``values`` on ``[0, Gamma)``.

    The minimizer is the weighted mean of one of the ``n`` unwrappings that
    lift the ``k`` smallest values by ``Gamma`` (``k = 0..n-1``); each is
    evaluated and the best returned, ties going to the smallest location.
    ``variances`` is indexed by ``labels`` (default ``0..n-1``) or, when a
    plain sequence, aligned with ``values``.
    """
    if len(values) == 0:
        raise EmptyInput("no values")
    labels = list(range(len(values))) if labels is None else list(labels)
    if variances is None or isinstance(variances, (NoiseModel, Mapping)):
        w = _weights(labels, variances)
    else:
        w = 1.0 / np.asarray(variances, dtype=float)
    v = np.array([wrap(float(x), Gamma) for x in values])
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    total = w.sum()
    base = float(np.dot(w, v))
    best_x, best_f = None, np.inf
    lifted = 0.0
    for k in range(v.size):
        x = wrap((base + Gamma * lifted) / total, Gamma)
        f = circular_objective(x, v, w, Gamma)
        if f < best_f - 1e-12 or (abs(f - best_f) <= 1e-12 and x < best_x):
            best_x, best_f = x, f
        lifted += w[k]
    return float(best_x)
