"""Variant benchmark table, rendering, and the paired sign test."""

import csv
import io
import math

import pytest

from mixrank.benchmark import (
    DEFAULT_GRID,
    INTERACTION_NAMESPACES,
    SCORE_NAMESPACES,
    VariantSpec,
    benchmark_variants,
    default_variants,
    ranked_lists_by_margin,
    render_table_csv,
    render_table_text,
    report_for_margins,
    sign_test,
    sign_test_pvalue,
)
from mixrank.gbdt import GbdtTrainConfig
from mixrank.glmix import GlmixTrainConfig
from mixrank.synthgen import GeneratorSpec, generate


class TestVariantRoster:
    def test_seven_rows_baseline_first(self):
        variants = default_variants()
        assert len(variants) == 7
        assert variants[0].is_baseline
        assert variants[0].name == "gbdt baseline"

    def test_score_rows_precede_interaction_rows(self):
        names = [v.name for v in default_variants()]
        assert names[1:4] == [
            "glmix global [ltr+score]",
            "glmix global+contract [ltr+score]",
            "glmix global+contract+recruiter [ltr+score]",
        ]
        assert names[4:] == [
            "glmix global [ltr+score+interactions]",
            "glmix global+contract [ltr+score+interactions]",
            "glmix global+contract+recruiter [ltr+score+interactions]",
        ]

    def test_namespace_sets(self):
        variants = default_variants()
        assert all(v.namespaces == SCORE_NAMESPACES for v in variants[1:4])
        assert all(v.namespaces == INTERACTION_NAMESPACES for v in variants[4:])
        assert "int" not in SCORE_NAMESPACES


class TestRankedListsByMargin:
    def test_orders_each_request(self, train_set):
        margins = [float(i % 7) for i in range(train_set.n)]
        ranked = ranked_lists_by_margin(train_set, margins)
        requests = {r.request_id for r in train_set.records}
        assert {rl.request_id for rl in ranked} == requests
        for rl in ranked:
            scores = [it.score for it in rl.items]
            assert scores == sorted(scores, reverse=True)

    def test_report_uses_all_records_for_logloss(self, train_set):
        margins = [0.0] * train_set.n
        report = report_for_margins(train_set, margins, ks=(1, 5))
        assert report.log_loss == pytest.approx(math.log(2.0), abs=1e-12)
        assert report.query_count == len({r.request_id for r in train_set.records})


@pytest.fixture(scope="module")
def bench_split():
    spec = GeneratorSpec(
        num_recruiters=8, num_contracts=4, queries_per_recruiter=8,
        candidates_per_query=12, num_ltr_features=4,
        interaction_spec=((("ltr", "f0"), ("ltr", "f1"), 1.5),),
        seed=29,
    )
    train, validation, test, _ = generate(spec)
    return train, validation, test


@pytest.fixture(scope="module")
def bench_table(bench_split):
    train, validation, test = bench_split
    return benchmark_variants(
        train, validation, test,
        gbdt_cfg=GbdtTrainConfig(num_trees=10, max_depth=2),
        grid=[(10.0, 10.0, 10.0)],
        glmix_base=GlmixTrainConfig(outer_passes=1),
        ks=(1, 5),
    )


class TestBenchmarkVariants:
    def test_seven_rows_in_roster_order(self, bench_table):
        assert [row.name for row in bench_table.rows] == [v.name for v in default_variants()]

    def test_baseline_row_has_no_lifts(self, bench_table):
        baseline = bench_table.rows[0]
        assert baseline.lifts is None and baseline.lambdas is None

    def test_variant_rows_carry_lambdas_and_lifts(self, bench_table):
        for row in bench_table.rows[1:]:
            assert row.lambdas == (10.0, 10.0, 10.0)
            assert set(row.lifts) == {1, 5}

    def test_lifts_consistent_with_reports(self, bench_table):
        base = bench_table.rows[0].report.at_k
        for row in bench_table.rows[1:]:
            for k, v in row.lifts.items():
                expected = 100.0 * (row.report.at_k[k] - base[k]) / base[k]
                assert v == pytest.approx(expected, abs=1e-12)

    def test_baseline_only_run(self, bench_split):
        train, validation, test = bench_split
        table = benchmark_variants(
            train, validation, test,
            variants=[VariantSpec("gbdt baseline", None)],
            gbdt_cfg=GbdtTrainConfig(num_trees=5, max_depth=2),
        )
        assert len(table.rows) == 1
        assert table.rows[0].lifts is None

    def test_empty_variant_list_rejected(self, bench_split):
        train, validation, test = bench_split
        with pytest.raises(ValueError, match="empty"):
            benchmark_variants(train, validation, test, variants=[])

    def test_missing_baseline_rejected(self, bench_split):
        train, validation, test = bench_split
        with pytest.raises(ValueError, match="baseline"):
            benchmark_variants(
                train, validation, test,
                variants=[VariantSpec("glmix global [ltr+score]", frozenset({"global"}), SCORE_NAMESPACES)],
            )

    def test_default_grid_is_diagonal(self):
        assert DEFAULT_GRID == ((1.0, 1.0, 1.0), (10.0, 10.0, 10.0),
                                (100.0, 100.0, 100.0), (1000.0, 1000.0, 1000.0))


class TestRendering:
    def test_text_table_shape(self, bench_table):
        text = render_table_text(bench_table)
        lines = text.strip().splitlines()
        assert len(lines) == 2 + 7  # header, rule, one line per row
        assert lines[0].split()[:1] == ["variant"]
        assert "lift@1" in lines[0] and "lift@5" in lines[0]
        # baseline renders placeholders
        assert "-" in lines[2].split()

    def test_text_lift_formatting(self, bench_table):
        text = render_table_text(bench_table)
        for row in bench_table.rows[1:]:
            assert f"{row.lifts[1]:+.3f}%" in text

    def test_csv_round_trips(self, bench_table):
        parsed = list(csv.reader(io.StringIO(render_table_csv(bench_table))))
        assert parsed[0] == ["variant", "lift@1", "lift@5"]
        assert len(parsed) == 8
        assert parsed[1][1:] == ["-", "-"]


class TestSignTest:
    def test_pvalue_hand_case(self):
        # P(X >= 8) for X ~ Binomial(10, 1/2) = (45 + 10 + 1) / 1024
        assert sign_test_pvalue(8, 10) == pytest.approx(56.0 / 1024.0, abs=1e-15)

    def test_pvalue_extremes(self):
        assert sign_test_pvalue(0, 10) == pytest.approx(1.0)
        assert sign_test_pvalue(10, 10) == pytest.approx(2.0 ** -10)

    def test_ties_dropped(self):
        res = sign_test([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 4.0, 2.0])
        assert (res.wins, res.losses, res.ties) == (2, 1, 1)
        assert res.p_value == pytest.approx(sign_test_pvalue(2, 3))

    def test_all_ties_is_inconclusive(self):
        res = sign_test([1.0, 1.0], [1.0, 1.0])
        assert res.wins == res.losses == 0
        assert res.p_value == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sign_test([1.0], [1.0, 2.0])
