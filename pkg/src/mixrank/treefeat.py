"""Tree-derived feature encodings.

A trained forest gives each record two derived views: the score feature
(the ensemble margin, one number under ``xgb:score``) and the interaction
features (one-hot indicators ``int:t{k}:l{j}``, one per tree, marking the
leaf the record lands in). The union of the raw features with both views
is the enriched representation used by the downstream linear models.
"""
from __future__ import annotations

from .core import Dataset, FeatureKey, FeatureVector, ImpressionRecord, sigmoid
from .gbdt import GbdtModel, batch_leaf_ordinals, batch_margins, leaf_indices, predict_margin

SCORE_KEY: FeatureKey = ("xgb", "score")
INTERACTION_NAMESPACE = "int"


def interaction_features(m: GbdtModel, x: FeatureVector) -> FeatureVector:
    """One indicator per tree: ``int:t{k}:l{j}`` = 1 for the reached leaf."""
    return FeatureVector(
        {(INTERACTION_NAMESPACE, f"t{k}:l{j}"): 1.0 for k, j in leaf_indices(m, x)}
    )


def score_feature(m: GbdtModel, x: FeatureVector, as_probability: bool = False) -> FeatureVector:
    """The ensemble score under ``xgb:score``; raw margin unless asked for
    the sigmoid-transformed probability."""
    margin = predict_margin(m, x)
    return FeatureVector({SCORE_KEY: sigmoid(margin) if as_probability else margin})


def assemble_f_all(x: FeatureVector, score: FeatureVector, interactions: FeatureVector) -> FeatureVector:
    """Disjoint union of the raw, score, and interaction views."""
    merged: dict[FeatureKey, float] = dict(x)
    for part in (score, interactions):
        for key, value in part.items():
            if key in merged:
                raise ValueError(f"feature key collision while assembling f_all: {key[0]}:{key[1]}")
            merged[key] = value
    return FeatureVector(merged)


def enrich_dataset(
    m: GbdtModel,
    d: Dataset,
    as_probability: bool = False,
    interaction_model: GbdtModel | None = None,
) -> Dataset:
    """Dataset whose records carry ``f_all`` instead of the raw features.

    Batch equivalent of :func:`assemble_f_all` applied record by record.
    The score comes from ``m``; the interaction features come from
    ``interaction_model`` when given (the two-level pipeline uses
    distinct first- and second-level forests), else from ``m`` too.
    """
    margins = batch_margins(m, d)
    ordinals = batch_leaf_ordinals(interaction_model if interaction_model is not None else m, d)
    scores = [sigmoid(v) for v in margins] if as_probability else margins
    out = []
    for i, r in enumerate(d.records):
        merged: dict[FeatureKey, float] = dict(r.features)
        for key, value in _derived_entries(float(scores[i]), ordinals[i]):
            if key in merged:
                raise ValueError(f"feature key collision while assembling f_all: {key[0]}:{key[1]}")
            merged[key] = value
        out.append(
            ImpressionRecord(
                request_id=r.request_id,
                context_id=r.context_id,
                recruiter_id=r.recruiter_id,
                candidate_id=r.candidate_id,
                contract_id=r.contract_id,
                label=r.label,
                features=FeatureVector(merged),
            )
        )
    return Dataset.build(out)


def _derived_entries(score: float, ordinals) -> list[tuple[FeatureKey, float]]:
    entries: list[tuple[FeatureKey, float]] = [(SCORE_KEY, score)]
    for k, j in enumerate(ordinals):
        entries.append(((INTERACTION_NAMESPACE, f"t{k}:l{int(j)}"), 1.0))
    return entries
