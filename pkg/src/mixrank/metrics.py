"""Ranking and classification metrics.

Positive-Responses@k is the primary ranking metric: the mean, over
queries, of how many of the top k results carry a positive label.
Queries shorter than k contribute their whole list. Log-loss and AUC
are computed from (margin, label) pairs; margins are pre-sigmoid scores.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np
import scipy.stats

if TYPE_CHECKING:
    from .twolevel import RankedList


@dataclass(frozen=True)
class MetricReport:
    at_k: Mapping[int, float]
    log_loss: float
    auc: float
    query_count: int

    def __post_init__(self):
        if self.query_count < 1:
            raise ValueError("query_count must be >= 1")
        for k, v in self.at_k.items():
            if not 0.0 <= v <= k:
                raise ValueError(f"positive responses at k={k} out of range: {v}")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc out of range: {self.auc}")


def topk_positive_mean(label_lists: Sequence[Sequence[int]], k: int) -> float:
    """Mean count of positive labels in the top min(k, len) of each list."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not label_lists:
        raise ValueError("no queries to evaluate")
    return float(sum(sum(labels[:k]) for labels in label_lists) / len(label_lists))


def positive_responses_at_k(ranked: "Sequence[RankedList]", k: int) -> float:
    """topk_positive_mean over ranked lists, reading labels off the items."""
    return topk_positive_mean(
        [[item.record.label for item in rl.items] for rl in ranked], k
    )


def log_loss(scored: Iterable[tuple[float, int]]) -> float:
    """Mean logistic loss of sigmoid(margin) against the labels."""
    pairs = list(scored)
    if not pairs:
        raise ValueError("no scored examples")
    margins = np.array([s for s, _ in pairs])
    z = 2.0 * np.array([y for _, y in pairs]) - 1.0
    return float(np.logaddexp(0.0, -z * margins).mean())


def auc(scored: Iterable[tuple[float, int]]) -> float:
    """Probability a random positive outscores a random negative, ties 0.5.

    Computed exactly from average ranks, which equals the pairwise
    definition including the half-credit for ties.
    """
    pairs = list(scored)
    scores = np.array([s for s, _ in pairs])
    labels = np.array([y for _, y in pairs])
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc requires both classes present")
    ranks = scipy.stats.rankdata(scores, method="average")
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_rankings(
    ranked: "Sequence[RankedList]",
    ks: Sequence[int] = (1, 5, 25),
    scored: Iterable[tuple[float, int]] | None = None,
) -> MetricReport:
    """MetricReport over ranked lists.

    Log-loss and AUC come from ``scored`` (margin, label) pairs when
    given, so they can cover the full candidate pool; otherwise they are
    computed from the ranked items themselves.
    """
    if scored is None:
        scored = [(item.score, item.record.label) for rl in ranked for item in rl.items]
    else:
        scored = list(scored)
    return MetricReport(
        at_k={k: positive_responses_at_k(ranked, k) for k in ks},
        log_loss=log_loss(scored),
        auc=auc(scored),
        query_count=len(ranked),
    )


def lift(candidate: MetricReport, baseline: MetricReport) -> dict[int, float]:
    """Percent improvement over the baseline at each k both reports share."""
    out = {}
    for k in candidate.at_k:
        if k not in baseline.at_k:
            continue
        base = baseline.at_k[k]
        if base == 0.0:
            raise ValueError(f"baseline metric is zero at k={k}; lift undefined")
        out[k] = 100.0 * (candidate.at_k[k] - base) / base
    return out


def format_lift(value: float) -> str:
    return f"{value:+.3f}%"
