"""Offline benchmark: mixed-model variants against a plain GBDT ranker.

One GBDT is trained on the raw training split; it serves both as the
pointwise baseline ranker and as the source of the score and interaction
features. Each mixed-model variant is grid-searched on the validation
split, then all rows are evaluated on the test split and reported as
percent lifts over the baseline at k in {1, 5, 25}.

The default variant list has seven rows: the baseline, then the three
personalization levels (global; global+contract; global+contract+
recruiter) with score features only, then the same three levels with
score and interaction features.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .core import Dataset, TrainingError, group_by_request
from .gbdt import GbdtTrainConfig, batch_margins, train_gbdt
from .glmix import (
    CONTRACT,
    GLOBAL,
    RECRUITER,
    GlmixModel,
    GlmixTrainConfig,
    grid_search,
)
from .metrics import MetricReport, evaluate_rankings, format_lift, lift
from .treefeat import enrich_dataset
from .twolevel import RankedItem, RankedList

DEFAULT_GRID: tuple[tuple[float, float, float], ...] = tuple(
    (v, v, v) for v in (1.0, 10.0, 100.0, 1000.0)
)

SCORE_NAMESPACES = frozenset({"ltr", "xgb"})
INTERACTION_NAMESPACES = frozenset({"ltr", "xgb", "int"})


@dataclass(frozen=True)
class VariantSpec:
    """One benchmark row; ``components`` of None marks the GBDT baseline."""

    name: str
    components: frozenset | None
    namespaces: frozenset | None = None

    @property
    def is_baseline(self) -> bool:
        return self.components is None


def default_variants() -> tuple[VariantSpec, ...]:
    levels = (
        ("global", frozenset({GLOBAL})),
        ("global+contract", frozenset({GLOBAL, CONTRACT})),
        ("global+contract+recruiter", frozenset({GLOBAL, CONTRACT, RECRUITER})),
    )
    rows = [VariantSpec("gbdt baseline", None)]
    for suffix, namespaces in (("score", SCORE_NAMESPACES), ("score+interactions", INTERACTION_NAMESPACES)):
        for level_name, components in levels:
            rows.append(VariantSpec(f"glmix {level_name} [ltr+{suffix}]", components, namespaces))
    return tuple(rows)


@dataclass(frozen=True)
class BenchmarkRow:
    name: str
    lambdas: tuple[float, float, float] | None
    report: MetricReport
    lifts: dict[int, float] | None  # None on the baseline row


@dataclass(frozen=True)
class BenchmarkTable:
    rows: tuple[BenchmarkRow, ...]
    ks: tuple[int, ...]


def ranked_lists_by_margin(d: Dataset, margins: Sequence[float]) -> list[RankedList]:
    """One full-length RankedList per request, ordered by the given margins."""
    out = []
    for request_id, indices in sorted(group_by_request(d).items()):
        scored = sorted(
            ((-float(margins[i]), d.records[i].candidate_id, i) for i in indices)
        )
        out.append(
            RankedList(
                request_id=request_id,
                items=tuple(RankedItem(cid, d.records[i], -neg) for neg, cid, i in scored),
            )
        )
    return out


def glmix_margins(m: GlmixModel, d: Dataset) -> list[float]:
    return [m.score(r.features, r.recruiter_id, r.contract_id)[0] for r in d.records]


def report_for_margins(d: Dataset, margins: Sequence[float], ks: Sequence[int]) -> MetricReport:
    """MetricReport of the margin-ordered rankings, with log-loss and AUC
    over every record."""
    ranked = ranked_lists_by_margin(d, margins)
    scored = [(float(margins[i]), r.label) for i, r in enumerate(d.records)]
    return evaluate_rankings(ranked, ks, scored)


def benchmark_variants(
    train: Dataset,
    validation: Dataset,
    test: Dataset,
    variants: Sequence[VariantSpec] | None = None,
    gbdt_cfg: GbdtTrainConfig | None = None,
    grid: Sequence[tuple[float, float, float]] = DEFAULT_GRID,
    glmix_base: GlmixTrainConfig | None = None,
    ks: Sequence[int] = (1, 5, 25),
    workers: int | None = None,
) -> BenchmarkTable:
    """Train every variant and report lifts over the baseline row."""
    if variants is None:
        variants = default_variants()
    if not variants:
        raise ValueError("variant list is empty")
    if not any(v.is_baseline for v in variants):
        raise ValueError("variant list must include the GBDT baseline")

    forest = train_gbdt(train, gbdt_cfg if gbdt_cfg is not None else GbdtTrainConfig())
    baseline_report = report_for_margins(test, batch_margins(forest, test), ks)

    enriched_train = enrich_dataset(forest, train)
    enriched_validation = enrich_dataset(forest, validation)
    enriched_test = enrich_dataset(forest, test)
    base_cfg = glmix_base if glmix_base is not None else GlmixTrainConfig()

    rows = []
    for variant in variants:
        if variant.is_baseline:
            rows.append(BenchmarkRow(variant.name, None, baseline_report, None))
            continue
        cfg = replace(
            base_cfg,
            enabled_components=variant.components,
            feature_config={c: variant.namespaces for c in (GLOBAL, CONTRACT, RECRUITER)},
        )
        try:
            result = grid_search(
                enriched_train, enriched_validation, grid,
                base_cfg=cfg, workers=workers,
            )
        except TrainingError as e:
            raise TrainingError(f"variant {variant.name!r}: {e}") from e
        report = report_for_margins(enriched_test, glmix_margins(result.best_model, enriched_test), ks)
        rows.append(BenchmarkRow(variant.name, result.best, report, lift(report, baseline_report)))
    return BenchmarkTable(rows=tuple(rows), ks=tuple(ks))


# -- rendering ---------------------------------------------------------------


def _cells(table: BenchmarkTable) -> list[list[str]]:
    out = [["variant", *(f"lift@{k}" for k in table.ks)]]
    for row in table.rows:
        if row.lifts is None:
            out.append([row.name, *("-" for _ in table.ks)])
        else:
            out.append([row.name, *(format_lift(row.lifts[k]) for k in table.ks)])
    return out


def render_table_text(table: BenchmarkTable) -> str:
    cells = _cells(table)
    widths = [max(len(r[c]) for r in cells) for c in range(len(cells[0]))]
    lines = []
    for r, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_table_csv(table: BenchmarkTable) -> str:
    return "\n".join(",".join(row) for row in _cells(table)) + "\n"


# -- paired sign test --------------------------------------------------------


@dataclass(frozen=True)
class SignTestResult:
    wins: int
    losses: int
    ties: int
    p_value: float


def sign_test_pvalue(wins: int, trials: int) -> float:
    """One-sided binomial tail: P[X >= wins] for X ~ Binomial(trials, 1/2)."""
    if not 0 <= wins <= trials:
        raise ValueError("wins must be within [0, trials]")
    if trials == 0:
        return 1.0
    total = sum(math.comb(trials, i) for i in range(wins, trials + 1))
    return total / 2.0**trials


def sign_test(xs: Sequence[float], ys: Sequence[float]) -> SignTestResult:
    """Paired one-sided sign test of x > y; ties are dropped."""
    if len(xs) != len(ys):
        raise ValueError("paired samples must have equal length")
    wins = sum(1 for x, y in zip(xs, ys) if x > y)
    losses = sum(1 for x, y in zip(xs, ys) if x < y)
    ties = len(xs) - wins - losses
    return SignTestResult(wins, losses, ties, sign_test_pvalue(wins, wins + losses))
