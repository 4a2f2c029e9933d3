"""Two-level ranking: GBDT retrieval, then mixed-model re-ranking.

Level one scores a query's candidates with a GBDT and keeps the top k1.
Level two enriches each surviving candidate with the level-one model's
score feature and a second GBDT's leaf interaction features, scores the
enriched vector with the mixed model, and keeps the top k2. The daily
pipeline replays this over day-partitioned data with a sliding training
window, refreshing the mixed model once per day.

Ties at either level break by candidate_id ascending, so rankings are
deterministic and independent of input order or worker count.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

from .core import Dataset, ImpressionRecord, TrainingError, concat_datasets, group_by_request
from .gbdt import GbdtModel, predict_margin
from .glmix import GlmixModel, GlmixTrainConfig, save_glmix_model, train_glmix
from .metrics import MetricReport, evaluate_rankings
from .treefeat import assemble_f_all, enrich_dataset, interaction_features, score_feature


@dataclass(frozen=True)
class RankedItem:
    candidate_id: str
    record: ImpressionRecord
    score: float


@dataclass(frozen=True)
class RankedList:
    request_id: str
    items: tuple[RankedItem, ...]

    def __post_init__(self):
        seen = set()
        previous = None
        for item in self.items:
            if item.candidate_id in seen:
                raise ValueError(f"duplicate candidate_id {item.candidate_id!r} in ranked list")
            seen.add(item.candidate_id)
            if previous is not None and item.score > previous:
                raise ValueError("ranked list scores must be non-increasing")
            previous = item.score


@dataclass(frozen=True)
class PipelineConfig:
    k1: int = 50
    k2: int = 10
    l1_model: GbdtModel = None
    l2_interaction_model: GbdtModel = None
    glmix: GlmixModel = None

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1 and k2 must be >= 1")
        if self.k2 > self.k1:
            raise ValueError(f"k2 ({self.k2}) must not exceed k1 ({self.k1})")


def _to_ranked_list(request_id: str, scored: list[tuple[float, str, ImpressionRecord]], k: int) -> RankedList:
    scored.sort(key=lambda t: (-t[0], t[1]))
    return RankedList(
        request_id=request_id,
        items=tuple(RankedItem(cid, rec, s) for s, cid, rec in scored[:k]),
    )


def rank_l1(query_records: Sequence[ImpressionRecord], m: GbdtModel, k1: int) -> RankedList:
    """Top-k1 of one query's candidates by GBDT margin, descending."""
    if not query_records:
        raise ValueError("query_records is empty")
    request_ids = {r.request_id for r in query_records}
    if len(request_ids) != 1:
        raise ValueError(f"query_records mixes request_ids: {sorted(request_ids)}")
    scored = [(predict_margin(m, r.features), r.candidate_id, r) for r in query_records]
    return _to_ranked_list(request_ids.pop(), scored, k1)


def rerank_l2(l1: RankedList, cfg: PipelineConfig) -> RankedList:
    """Re-score the level-one survivors with the mixed model over f_all."""
    scored = []
    for item in l1.items:
        r = item.record
        f_all = assemble_f_all(
            r.features,
            score_feature(cfg.l1_model, r.features),
            interaction_features(cfg.l2_interaction_model, r.features),
        )
        margin, _ = cfg.glmix.score(f_all, r.recruiter_id, r.contract_id)
        scored.append((margin, r.candidate_id, r))
    return _to_ranked_list(l1.request_id, scored, cfg.k2)


def rank_two_level(query_records: Sequence[ImpressionRecord], cfg: PipelineConfig) -> tuple[RankedList, RankedList]:
    """(level-one list, level-two list) for one query."""
    l1 = rank_l1(query_records, cfg.l1_model, cfg.k1)
    return l1, rerank_l2(l1, cfg)


@dataclass(frozen=True)
class DailyResult:
    day: int
    model: GlmixModel
    metrics: MetricReport


def run_daily_pipeline(
    day_partitions: Sequence[Dataset],
    train_window: int,
    l1_model: GbdtModel,
    l2_interaction_model: GbdtModel,
    glmix_cfg: GlmixTrainConfig,
    k1: int = 50,
    k2: int = 10,
    ks: Sequence[int] = (1, 5, 25),
    store_dir=None,
    workers: int | None = None,
) -> list[DailyResult]:
    """Sliding-window replay: for each day t with a full window behind it,
    train the mixed model on days [t-train_window, t) and evaluate on day t.

    Models are serialized under ``store_dir/day_<t>`` when a store
    directory is given. Metrics cover the day's two-level rankings, with
    log-loss and AUC over every record of the day.
    """
    if train_window < 1:
        raise ValueError("train_window must be >= 1")
    if len(day_partitions) < train_window + 1:
        raise ValueError(
            f"need at least {train_window + 1} day partitions for a "
            f"{train_window}-day window, got {len(day_partitions)}"
        )
    enriched = [
        enrich_dataset(l1_model, d, interaction_model=l2_interaction_model)
        for d in day_partitions
    ]

    results = []
    for t in range(train_window, len(day_partitions)):
        train = concat_datasets(enriched[t - train_window:t])
        try:
            model = train_glmix(train, glmix_cfg, workers=workers)
        except TrainingError as e:
            raise TrainingError(f"day {t}: {e}") from e
        cfg = PipelineConfig(
            k1=k1, k2=k2, l1_model=l1_model,
            l2_interaction_model=l2_interaction_model, glmix=model,
        )
        day = day_partitions[t]
        ranked = [
            rerank_l2(rank_l1([day.records[i] for i in indices], l1_model, k1), cfg)
            for _, indices in sorted(group_by_request(day).items())
        ]
        scored = [
            (model.score(r.features, r.recruiter_id, r.contract_id)[0], r.label)
            for r in enriched[t].records
        ]
        report = evaluate_rankings(ranked, ks, scored)
        if store_dir is not None:
            save_glmix_model(
                model,
                os.path.join(os.fspath(store_dir), f"day_{t:03d}"),
                metadata={
                    "day": t,
                    "train_window": train_window,
                    "train_days": [t - train_window, t],
                    "lambdas": {
                        "global": glmix_cfg.lambda_global,
                        "contract": glmix_cfg.lambda_contract,
                        "recruiter": glmix_cfg.lambda_recruiter,
                    },
                },
            )
        results.append(DailyResult(day=t, model=model, metrics=report))
    return results
