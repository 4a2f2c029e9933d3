"""Two-level ranking: retrieval cut, re-rank, and the daily replay loop."""

import numpy as np
import pytest

from mixrank.core import (
    INTERCEPT_KEY,
    EntityKind,
    FeatureVector,
    ImpressionRecord,
    group_by_request,
)
from mixrank.gbdt import GbdtModel, GbdtTrainConfig, Internal, Leaf, predict_margin, train_gbdt
from mixrank.glmix import GLOBAL, CONTRACT, RECRUITER, GlmixModel, GlmixTrainConfig
from mixrank.synthgen import GeneratorSpec, generate_days
from mixrank.twolevel import (
    DailyResult,
    PipelineConfig,
    RankedItem,
    RankedList,
    rank_l1,
    rank_two_level,
    rerank_l2,
    run_daily_pipeline,
)

F0 = ("ltr", "f0")


def _record(i, f0, request_id="q0", label=0):
    return ImpressionRecord(
        request_id=request_id,
        context_id="ctx0",
        recruiter_id="r0",
        candidate_id=f"ca{i:04d}",
        contract_id="c0",
        label=label,
        features=FeatureVector({F0: f0, INTERCEPT_KEY: 1.0}),
    )


def _stump_model(w_left=-0.5, w_right=0.5):
    root = Internal(feature=F0, threshold=0.5, default_left=True,
                    left=Leaf(w_left, 0), right=Leaf(w_right, 1))
    return GbdtModel(trees=(root,), learning_rate=0.1, base_score=0.0,
                     feature_schema=frozenset([F0]),
                     config=GbdtTrainConfig(num_trees=1, max_depth=1))


def _score_only_glmix(weight=2.5):
    return GlmixModel(
        fixed=FeatureVector({("xgb", "score"): weight}),
        random_effects={EntityKind.RECRUITER: {}, EntityKind.CONTRACT: {}},
        feature_config={GLOBAL: None, CONTRACT: None, RECRUITER: None},
    )


class TestRankedList:
    def test_rejects_duplicate_candidates(self):
        r = _record(1, 0.2)
        with pytest.raises(ValueError, match="duplicate"):
            RankedList("q0", (RankedItem("ca1", r, 1.0), RankedItem("ca1", r, 0.5)))

    def test_rejects_increasing_scores(self):
        a, b = _record(1, 0.2), _record(2, 0.8)
        with pytest.raises(ValueError, match="non-increasing"):
            RankedList("q0", (RankedItem("ca1", a, 0.5), RankedItem("ca2", b, 1.0)))


class TestPipelineConfig:
    def test_desk_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.k1, cfg.k2) == (50, 10)

    def test_k2_not_above_k1(self):
        with pytest.raises(ValueError, match=r"k2 \(9\) must not exceed k1 \(3\)"):
            PipelineConfig(k1=3, k2=9)

    def test_positive_ks(self):
        with pytest.raises(ValueError):
            PipelineConfig(k1=0, k2=0)


class TestRankL1:
    def test_top_k_by_margin_descending(self):
        m = _stump_model()
        records = [_record(i, f0) for i, f0 in enumerate([0.1, 0.9, 0.3, 0.8])]
        rl = rank_l1(records, m, k1=2)
        assert rl.request_id == "q0"
        assert [it.candidate_id for it in rl.items] == ["ca0001", "ca0003"]
        assert all(it.score == 0.5 for it in rl.items)

    def test_ties_break_by_candidate_id(self):
        m = _stump_model(w_left=0.0, w_right=0.0)
        records = [_record(i, 0.1) for i in (3, 1, 2)]
        rl = rank_l1(records, m, k1=3)
        assert [it.candidate_id for it in rl.items] == ["ca0001", "ca0002", "ca0003"]

    def test_k1_longer_than_pool_keeps_everything(self):
        m = _stump_model()
        rl = rank_l1([_record(i, 0.2) for i in range(3)], m, k1=50)
        assert len(rl.items) == 3

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            rank_l1([], _stump_model(), k1=5)

    def test_mixed_requests_rejected(self):
        records = [_record(0, 0.1, request_id="qa"), _record(1, 0.2, request_id="qb")]
        with pytest.raises(ValueError, match="qa.*qb"):
            rank_l1(records, _stump_model(), k1=5)


class TestRerankL2:
    def _cfg(self, glmix, k1=10, k2=3):
        m = _stump_model()
        return PipelineConfig(k1=k1, k2=k2, l1_model=m, l2_interaction_model=m, glmix=glmix)

    def test_l2_is_subset_of_l1(self, gbdt_model, train_set):
        glmix = _score_only_glmix()
        cfg = PipelineConfig(k1=8, k2=3, l1_model=gbdt_model,
                             l2_interaction_model=gbdt_model, glmix=glmix)
        indices = next(iter(sorted(group_by_request(train_set).items())))[1]
        records = [train_set.records[i] for i in indices]
        l1, l2 = rank_two_level(records, cfg)
        assert len(l1.items) == 8 and len(l2.items) == 3
        l1_ids = {it.candidate_id for it in l1.items}
        assert {it.candidate_id for it in l2.items} <= l1_ids

    def test_monotone_score_model_preserves_l1_order(self, gbdt_model, train_set):
        # a mixed model whose only signal is a positive weight on the
        # ensemble score must reproduce the level-one ordering
        glmix = _score_only_glmix(weight=3.0)
        cfg = PipelineConfig(k1=10, k2=10, l1_model=gbdt_model,
                             l2_interaction_model=gbdt_model, glmix=glmix)
        for _, indices in sorted(group_by_request(train_set).items())[:5]:
            records = [train_set.records[i] for i in indices]
            l1, l2 = rank_two_level(records, cfg)
            assert [it.candidate_id for it in l2.items] == [it.candidate_id for it in l1.items]

    def test_rerank_can_reorder(self):
        # interaction features carry the rerank signal here: the stump's
        # leaf identity flips the sign of the mixed-model score
        m = _stump_model()
        glmix = GlmixModel(
            fixed=FeatureVector({("int", "t0:l0"): 1.0, ("int", "t0:l1"): -1.0}),
            random_effects={EntityKind.RECRUITER: {}, EntityKind.CONTRACT: {}},
            feature_config={GLOBAL: None, CONTRACT: None, RECRUITER: None},
        )
        cfg = self._cfg(glmix, k1=4, k2=4)
        records = [_record(i, f0) for i, f0 in enumerate([0.9, 0.8, 0.1, 0.2])]
        l1, l2 = rank_two_level(records, cfg)
        assert [it.candidate_id for it in l1.items] == ["ca0000", "ca0001", "ca0002", "ca0003"]
        assert [it.candidate_id for it in l2.items] == ["ca0002", "ca0003", "ca0000", "ca0001"]

    def test_retrieval_scale_contract(self):
        # the production-shaped configuration: a 1000-candidate pool cut to
        # 1000 at level one and 125 at level two
        m = _stump_model()
        cfg = PipelineConfig(k1=1000, k2=125, l1_model=m,
                             l2_interaction_model=m, glmix=_score_only_glmix())
        records = [_record(i, (i % 97) / 97.0) for i in range(1000)]
        l1, l2 = rank_two_level(records, cfg)
        assert len(l1.items) == 1000
        assert len(l2.items) == 125


@pytest.fixture(scope="module")
def days():
    spec = GeneratorSpec(
        num_recruiters=6, num_contracts=3, queries_per_recruiter=8,
        candidates_per_query=10, num_ltr_features=4, seed=19,
    )
    partitions, _ = generate_days(spec, num_days=4)
    return partitions


@pytest.fixture(scope="module")
def l1(days):
    return train_gbdt(days[0], GbdtTrainConfig(num_trees=10, max_depth=2))


class TestDailyPipeline:
    def test_window_three_over_four_days_gives_one_result(self, days, l1):
        results = run_daily_pipeline(
            days, train_window=3, l1_model=l1, l2_interaction_model=l1,
            glmix_cfg=GlmixTrainConfig(outer_passes=1), k1=10, k2=5,
        )
        assert [r.day for r in results] == [3]
        assert isinstance(results[0], DailyResult)
        assert results[0].metrics.query_count == 12

    def test_window_two_over_four_days_gives_two_results(self, days, l1):
        results = run_daily_pipeline(
            days, train_window=2, l1_model=l1, l2_interaction_model=l1,
            glmix_cfg=GlmixTrainConfig(outer_passes=1), k1=10, k2=5,
        )
        assert [r.day for r in results] == [2, 3]

    def test_too_few_partitions_rejected(self, days, l1):
        with pytest.raises(ValueError, match="need at least 5 day partitions"):
            run_daily_pipeline(
                days, train_window=4, l1_model=l1, l2_interaction_model=l1,
                glmix_cfg=GlmixTrainConfig(outer_passes=1),
            )

    def test_store_written_per_day(self, days, l1, tmp_path):
        run_daily_pipeline(
            days, train_window=3, l1_model=l1, l2_interaction_model=l1,
            glmix_cfg=GlmixTrainConfig(outer_passes=1), k1=10, k2=5,
            store_dir=tmp_path,
        )
        store = tmp_path / "day_003"
        assert (store / "manifest.json").exists()
        assert (store / "fixed.json").exists()
