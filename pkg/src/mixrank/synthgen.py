"""Synthetic impression generator with a known generative model.

Labels are Bernoulli draws from a true margin that is the sum of a
global linear effect, per-recruiter and per-contract deviations, and
optional non-additive pair terms (an XOR-style bump no linear model can
express). A fraction of recruiters can be drawn with the sign of their
pair terms flipped, which puts heterogeneity inside the nonlinearity
itself rather than only in the linear coefficients. The generator
returns the full truth alongside the data, so tests can compare fitted
models against the model that actually produced the labels, and rank by
the true probabilities as a Bayes-optimal reference.

Everything is driven by one seeded generator; identical specs produce
bit-identical datasets.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    INTERCEPT_KEY,
    Dataset,
    EntityKind,
    FeatureKey,
    FeatureVector,
    ImpressionRecord,
    format_key,
    parse_key,
    sigmoid,
)
from .twolevel import RankedItem, RankedList

LTR_NAMESPACE = "ltr"


def _ordered_dot(coef: FeatureVector, x: FeatureVector) -> float:
    return sum(coef[k] * x.get(k) for k in sorted(coef))


def feature_keys(num_features: int) -> list[FeatureKey]:
    return [(LTR_NAMESPACE, f"f{j}") for j in range(num_features)]


def default_true_global(num_features: int) -> FeatureVector:
    """Intercept pulling the base rate below one half, plus alternating
    coefficients of decaying magnitude."""
    entries = {INTERCEPT_KEY: -1.0}
    for j, key in enumerate(feature_keys(num_features)):
        entries[key] = (1.0 if j % 2 == 0 else -1.0) * 1.5 * 0.85**j
    return FeatureVector(entries)


@dataclass(frozen=True)
class GeneratorSpec:
    num_recruiters: int = 25
    num_contracts: int = 8
    queries_per_recruiter: int = 12
    candidates_per_query: int = 30
    num_ltr_features: int = 6
    true_global: FeatureVector | None = None
    recruiter_deviation_scale: float = 0.8
    contract_deviation_scale: float = 0.5
    interaction_spec: tuple[tuple[FeatureKey, FeatureKey, float], ...] = ()
    interaction_flip_fraction: float = 0.0
    label_noise: float = 0.0
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        for name in ("num_recruiters", "num_contracts", "queries_per_recruiter", "candidates_per_query", "num_ltr_features"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.recruiter_deviation_scale < 0 or self.contract_deviation_scale < 0:
            raise ValueError("deviation scales must be non-negative")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must be in [0, 0.5)")
        if not 0.0 <= self.interaction_flip_fraction <= 1.0:
            raise ValueError("interaction_flip_fraction must be in [0, 1]")
        fractions = tuple(float(f) for f in self.split_fractions)
        if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError("split_fractions must be three positive numbers summing to 1")
        object.__setattr__(self, "split_fractions", fractions)
        object.__setattr__(self, "interaction_spec", tuple((tuple(a), tuple(b), float(s)) for a, b, s in self.interaction_spec))
        valid = set(feature_keys(self.num_ltr_features))
        for a, b, _ in self.interaction_spec:
            if a not in valid or b not in valid:
                raise ValueError(f"interaction term references unknown feature: {a} x {b}")
        total_queries = self.num_recruiters * self.queries_per_recruiter
        if min(fractions) * total_queries < 1:
            raise ValueError("not enough queries to populate every split")


@dataclass(frozen=True)
class GroundTruth:
    spec: GeneratorSpec
    global_coef: FeatureVector
    deviations: Mapping[EntityKind, Mapping[str, FeatureVector]]
    # +1.0 or -1.0 per recruiter; flipped recruiters reverse their pair terms
    interaction_signs: Mapping[str, float]

    def margin(self, x: FeatureVector, recruiter_id: str, contract_id: str) -> float:
        recruiters = self.deviations[EntityKind.RECRUITER]
        contracts = self.deviations[EntityKind.CONTRACT]
        if recruiter_id not in recruiters:
            raise ValueError(f"recruiter {recruiter_id!r} not covered by this truth")
        if contract_id not in contracts:
            raise ValueError(f"contract {contract_id!r} not covered by this truth")
        for key in self.global_coef:
            if key not in x:
                raise ValueError(f"record lacks generated feature {format_key(key)}")
        # summed in sorted key order so the value survives serialization
        # round trips bit-exactly regardless of entry insertion order
        total = sum(
            _ordered_dot(coef, x)
            for coef in (self.global_coef, recruiters[recruiter_id], contracts[contract_id])
        )
        sign = self.interaction_signs[recruiter_id]
        for a, b, strength in self.spec.interaction_spec:
            total += sign * (strength if (x[a] > 0.5) != (x[b] > 0.5) else -strength)
        return total

    def probability(self, x: FeatureVector, recruiter_id: str, contract_id: str) -> float:
        return sigmoid(self.margin(x, recruiter_id, contract_id))


def _split_counts(total: int, fractions: Sequence[float]) -> list[int]:
    # Largest-remainder apportionment; every split keeps at least one query.
    raw = [f * total for f in fractions]
    counts = [max(1, int(r)) for r in raw]
    while sum(counts) > total:
        counts[counts.index(max(counts))] -= 1
    order = sorted(range(3), key=lambda i: raw[i] - int(raw[i]), reverse=True)
    i = 0
    while sum(counts) < total:
        counts[order[i % 3]] += 1
        i += 1
    return counts


def _make_truth(spec: GeneratorSpec, rng: np.random.Generator) -> GroundTruth:
    coef_keys = [INTERCEPT_KEY, *feature_keys(spec.num_ltr_features)]
    true_global = spec.true_global if spec.true_global is not None else default_true_global(spec.num_ltr_features)

    def draw_deviation(scale: float) -> FeatureVector:
        values = rng.normal(0.0, scale, size=len(coef_keys)) if scale > 0 else np.zeros(len(coef_keys))
        return FeatureVector({k: float(v) for k, v in zip(coef_keys, values)})

    recruiter_ids = [f"re{i:03d}" for i in range(spec.num_recruiters)]
    contract_ids = [f"co{i:03d}" for i in range(spec.num_contracts)]
    deviations = {
        EntityKind.RECRUITER: {rid: draw_deviation(spec.recruiter_deviation_scale) for rid in recruiter_ids},
        EntityKind.CONTRACT: {cid: draw_deviation(spec.contract_deviation_scale) for cid in contract_ids},
    }
    if spec.interaction_flip_fraction > 0:
        flipped = rng.random(spec.num_recruiters) < spec.interaction_flip_fraction
        signs = {rid: -1.0 if f else 1.0 for rid, f in zip(recruiter_ids, flipped)}
    else:
        # draw nothing, so specs without flips keep their data stream
        signs = {rid: 1.0 for rid in recruiter_ids}
    return GroundTruth(spec=spec, global_coef=true_global, deviations=deviations, interaction_signs=signs)


def _generate_queries(spec: GeneratorSpec, rng: np.random.Generator, truth: GroundTruth) -> list[list[ImpressionRecord]]:
    keys = feature_keys(spec.num_ltr_features)
    recruiter_ids = sorted(truth.deviations[EntityKind.RECRUITER])
    contract_ids = sorted(truth.deviations[EntityKind.CONTRACT])
    queries = []
    query_index = 0
    candidate_index = 0
    for rid in recruiter_ids:
        for _ in range(spec.queries_per_recruiter):
            cid = contract_ids[int(rng.integers(spec.num_contracts))]
            request_id = f"q{query_index:06d}"
            context_id = f"ctx{query_index:06d}"
            query_records = []
            for _ in range(spec.candidates_per_query):
                values = rng.random(spec.num_ltr_features)
                x = FeatureVector({INTERCEPT_KEY: 1.0, **dict(zip(keys, values))})
                p = truth.probability(x, rid, cid)
                label = int(rng.random() < p)
                if spec.label_noise > 0 and rng.random() < spec.label_noise:
                    label = 1 - label
                query_records.append(
                    ImpressionRecord(
                        request_id=request_id,
                        context_id=context_id,
                        recruiter_id=rid,
                        candidate_id=f"ca{candidate_index:07d}",
                        contract_id=cid,
                        label=label,
                        features=x,
                    )
                )
                candidate_index += 1
            rng.shuffle(query_records)
            queries.append(query_records)
            query_index += 1
    return queries


def generate(spec: GeneratorSpec) -> tuple[Dataset, Dataset, Dataset, GroundTruth]:
    """(train, validation, test, truth), split disjointly by query."""
    rng = np.random.default_rng(spec.seed)
    truth = _make_truth(spec, rng)
    total_queries = spec.num_recruiters * spec.queries_per_recruiter
    counts = _split_counts(total_queries, spec.split_fractions)
    assignment = np.repeat([0, 1, 2], counts)
    rng.shuffle(assignment)
    queries = _generate_queries(spec, rng, truth)
    splits: tuple[list, list, list] = ([], [], [])
    for i, query_records in enumerate(queries):
        splits[assignment[i]].extend(query_records)
    train, validation, test = (Dataset.build(records) for records in splits)
    return train, validation, test, truth


def generate_days(spec: GeneratorSpec, num_days: int) -> tuple[list[Dataset], GroundTruth]:
    """Day-partitioned variant for pipeline replay: queries are dealt
    round-robin over ``num_days`` so every day covers all entities."""
    if num_days < 1:
        raise ValueError("num_days must be >= 1")
    total_queries = spec.num_recruiters * spec.queries_per_recruiter
    if num_days > total_queries:
        raise ValueError("more days than queries")
    rng = np.random.default_rng(spec.seed)
    truth = _make_truth(spec, rng)
    queries = _generate_queries(spec, rng, truth)
    buckets: list[list[ImpressionRecord]] = [[] for _ in range(num_days)]
    for i, query_records in enumerate(queries):
        buckets[i % num_days].extend(query_records)
    return [Dataset.build(records) for records in buckets], truth


def oracle_rank(truth: GroundTruth, query_records: Sequence[ImpressionRecord]) -> RankedList:
    """Rank one query by true probability: the Bayes-optimal ordering."""
    if not query_records:
        raise ValueError("query_records is empty")
    request_ids = {r.request_id for r in query_records}
    if len(request_ids) != 1:
        raise ValueError(f"query_records mixes request_ids: {sorted(request_ids)}")
    scored = sorted(
        (
            (-truth.probability(r.features, r.recruiter_id, r.contract_id), r.candidate_id, r)
            for r in query_records
        ),
    )
    return RankedList(
        request_id=request_ids.pop(),
        items=tuple(RankedItem(cid, rec, -neg) for neg, cid, rec in scored),
    )


# -- truth sidecar -----------------------------------------------------------


def truth_to_dict(truth: GroundTruth) -> dict:
    spec = truth.spec
    return {
        "version": 1,
        "kind": "truth",
        "spec": {
            "num_recruiters": spec.num_recruiters,
            "num_contracts": spec.num_contracts,
            "queries_per_recruiter": spec.queries_per_recruiter,
            "candidates_per_query": spec.candidates_per_query,
            "num_ltr_features": spec.num_ltr_features,
            "true_global": None if spec.true_global is None else spec.true_global.to_strkeys(),
            "recruiter_deviation_scale": spec.recruiter_deviation_scale,
            "contract_deviation_scale": spec.contract_deviation_scale,
            "interaction_spec": [
                [format_key(a), format_key(b), s] for a, b, s in spec.interaction_spec
            ],
            "interaction_flip_fraction": spec.interaction_flip_fraction,
            "label_noise": spec.label_noise,
            "split_fractions": list(spec.split_fractions),
            "seed": spec.seed,
        },
        "global": truth.global_coef.to_strkeys(),
        "deviations": {
            kind.value: {eid: coef.to_strkeys() for eid, coef in sorted(entities.items())}
            for kind, entities in truth.deviations.items()
        },
        "interaction_signs": dict(sorted(truth.interaction_signs.items())),
    }


def truth_from_dict(doc: Mapping) -> GroundTruth:
    if doc.get("version") != 1 or doc.get("kind") != "truth":
        raise ValueError("not a version-1 truth document")
    s = doc["spec"]
    spec = GeneratorSpec(
        num_recruiters=s["num_recruiters"],
        num_contracts=s["num_contracts"],
        queries_per_recruiter=s["queries_per_recruiter"],
        candidates_per_query=s["candidates_per_query"],
        num_ltr_features=s["num_ltr_features"],
        true_global=None if s["true_global"] is None else FeatureVector.from_strkeys(s["true_global"]),
        recruiter_deviation_scale=s["recruiter_deviation_scale"],
        contract_deviation_scale=s["contract_deviation_scale"],
        interaction_spec=tuple(
            (parse_key(a), parse_key(b), float(v)) for a, b, v in s["interaction_spec"]
        ),
        interaction_flip_fraction=s["interaction_flip_fraction"],
        label_noise=s["label_noise"],
        split_fractions=tuple(s["split_fractions"]),
        seed=s["seed"],
    )
    return GroundTruth(
        spec=spec,
        global_coef=FeatureVector.from_strkeys(doc["global"]),
        deviations={
            EntityKind(kind): {eid: FeatureVector.from_strkeys(c) for eid, c in entities.items()}
            for kind, entities in doc["deviations"].items()
        },
        interaction_signs={rid: float(v) for rid, v in doc["interaction_signs"].items()},
    )


def save_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(truth_to_dict(truth), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_truth(path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as fh:
        return truth_from_dict(json.load(fh))
