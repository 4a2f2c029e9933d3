"""Domain data model, sparse feature algebra, and dataset ingestion.

Features are sparse maps from ``(namespace, name)`` string pairs to real
values. A key that is absent contributes 0 to every linear-algebra
operation (tree models treat it as *missing* instead; see ``gbdt``).
Canonical namespaces: ``ltr`` for raw ranking features, ``xgb`` for the
tree-ensemble score, ``int`` for leaf-interaction indicators.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse

FeatureKey = tuple[str, str]

#: Key of the always-present constant feature appended at ingestion.
INTERCEPT_KEY: FeatureKey = ("ltr", "intercept")


class MixrankError(Exception):
    """Base class for errors raised by this package."""


class DatasetFormatError(MixrankError, ValueError):
    """A record file violates the JSON-lines impression schema."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TrainingError(MixrankError, RuntimeError):
    """Model training could not complete."""


def parse_key(text: str) -> FeatureKey:
    """Split a ``"namespace:name"`` string at the first colon."""
    ns, sep, name = text.partition(":")
    if not sep or not ns or not name:
        raise ValueError(f"feature key {text!r} is not of the form 'namespace:name'")
    return (ns, name)


def format_key(key: FeatureKey) -> str:
    return f"{key[0]}:{key[1]}"


class FeatureVector(Mapping):
    """Immutable sparse vector keyed by ``(namespace, name)`` pairs.

    Values must be finite; duplicate keys cannot be represented. Absent
    keys read as 0 via :meth:`get`.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[FeatureKey, float] | Iterable[tuple[FeatureKey, float]] = ()):
        d: dict[FeatureKey, float] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for key, value in items:
            if key in d:
                raise ValueError(f"duplicate feature key {format_key(key)!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite value for feature {format_key(key)!r}")
            d[key] = value
        self._entries = d

    @classmethod
    def from_strkeys(cls, entries: Mapping[str, float]) -> "FeatureVector":
        """Build from a ``{"namespace:name": value}`` mapping."""
        return cls((parse_key(k), v) for k, v in entries.items())

    def to_strkeys(self) -> dict[str, float]:
        return {format_key(k): v for k, v in sorted(self._entries.items())}

    def get(self, key: FeatureKey, default: float = 0.0) -> float:
        return self._entries.get(key, default)

    def restrict(self, namespaces: Iterable[str]) -> "FeatureVector":
        """Project onto the given namespaces."""
        allowed = frozenset(namespaces)
        return FeatureVector({k: v for k, v in self._entries.items() if k[0] in allowed})

    def __getitem__(self, key: FeatureKey) -> float:
        return self._entries[key]

    def __iter__(self) -> Iterator[FeatureKey]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FeatureVector):
            return self._entries == other._entries
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{format_key(k)}={v:g}" for k, v in sorted(self._entries.items()))
        return f"FeatureVector({inner})"


def dot(a: Mapping[FeatureKey, float], b: Mapping[FeatureKey, float]) -> float:
    """Sparse dot product; keys absent from either side contribute 0."""
    if len(b) < len(a):
        a, b = b, a
    total = 0.0
    get = b.get
    for key, value in a.items():
        other = get(key)
        if other is not None:
            total += value * other
    if not math.isfinite(total):
        raise ValueError("dot product is not finite; inputs are corrupt")
    return total


def logit(p: float) -> float:
    """log(p / (1-p)); defined only on the open interval (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit requires 0 < p < 1, got {p}")
    return math.log(p) - math.log1p(-p)


def sigmoid(s: float) -> float:
    """Numerically stable inverse of :func:`logit`."""
    if s >= 0.0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


class EntityKind(enum.Enum):
    """Entity types that carry their own coefficient vectors."""

    RECRUITER = "recruiter"
    CONTRACT = "contract"

    @property
    def id_field(self) -> str:
        return "recruiter_id" if self is EntityKind.RECRUITER else "contract_id"


@dataclass(frozen=True)
class ImpressionRecord:
    """One candidate shown for one search request, with outcome label.

    ``label`` is 1 when a message was sent and answered positively.
    """

    request_id: str
    context_id: str
    recruiter_id: str
    candidate_id: str
    contract_id: str
    label: int
    features: FeatureVector

    def __post_init__(self):
        for name in ("request_id", "context_id", "recruiter_id", "candidate_id", "contract_id"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ValueError(f"{name} must be a non-empty string")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    def entity_id(self, kind: EntityKind) -> str:
        return getattr(self, kind.id_field)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of impressions plus a dense feature index.

    ``feature_index`` maps every key appearing in any record (plus the
    intercept) to a column, lexicographically. The canonical identity of
    a feature is its key; columns are an internal acceleration. Instances
    are immutable and safe for concurrent reads.
    """

    records: tuple[ImpressionRecord, ...]
    feature_index: dict[FeatureKey, int]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(cls, records: Iterable[ImpressionRecord]) -> "Dataset":
        records = tuple(records)
        keys = {INTERCEPT_KEY}
        for r in records:
            keys.update(r.features)
        index = {k: i for i, k in enumerate(sorted(keys))}
        return cls(records=records, feature_index=index)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def m(self) -> int:
        return len(self.feature_index)

    @property
    def columns(self) -> list[FeatureKey]:
        """Feature keys in column order."""
        return sorted(self.feature_index, key=self.feature_index.get)

    def labels(self) -> np.ndarray:
        if "labels" not in self._cache:
            self._cache["labels"] = np.array([r.label for r in self.records], dtype=np.float64)
        return self._cache["labels"]

    def dense(self) -> np.ndarray:
        """n x m float64 matrix with NaN where a key is absent (tree view)."""
        if "dense" not in self._cache:
            X = np.full((self.n, self.m), np.nan)
            index = self.feature_index
            for i, r in enumerate(self.records):
                for key, value in r.features.items():
                    X[i, index[key]] = value
            X.setflags(write=False)
            self._cache["dense"] = X
        return self._cache["dense"]

    def csr(self) -> scipy.sparse.csr_matrix:
        """n x m sparse matrix with 0 where a key is absent (linear view)."""
        if "csr" not in self._cache:
            index = self.feature_index
            indptr = [0]
            indices: list[int] = []
            data: list[float] = []
            for r in self.records:
                for key, value in sorted(r.features.items(), key=lambda kv: index[kv[0]]):
                    indices.append(index[key])
                    data.append(value)
                indptr.append(len(indices))
            self._cache["csr"] = scipy.sparse.csr_matrix(
                (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
                shape=(self.n, self.m),
            )
        return self._cache["csr"]


def group_by_entity(d: Dataset, kind: EntityKind) -> dict[str, list[int]]:
    """Partition record indices by the entity id of the given kind."""
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(d.records):
        groups.setdefault(r.entity_id(kind), []).append(i)
    return groups


_REQUIRED_FIELDS = ("request_id", "context_id", "recruiter_id", "candidate_id", "contract_id", "label", "features")


def _reject_duplicate_keys(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise ValueError(f"duplicate feature key {key!r}")
        obj[key] = value
    return obj


def _parse_record(obj: dict) -> ImpressionRecord:
    missing = [f for f in _REQUIRED_FIELDS if f not in obj]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    label = obj["label"]
    if not isinstance(label, int) or isinstance(label, bool) or label not in (0, 1):
        raise ValueError(f"label must be the integer 0 or 1, got {label!r}")
    raw = obj["features"]
    if not isinstance(raw, dict):
        raise ValueError("features must be an object")
    entries: dict[FeatureKey, float] = {}
    for text, value in raw.items():
        key = parse_key(text)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ValueError(f"feature {text!r} has non-numeric or non-finite value {value!r}")
        entries[key] = float(value)
    # The constant feature is ours to manage: add it, or verify a
    # round-tripped file still carries the right value.
    existing = entries.get(INTERCEPT_KEY)
    if existing is None:
        entries[INTERCEPT_KEY] = 1.0
    elif existing != 1.0:
        raise ValueError(f"reserved feature {format_key(INTERCEPT_KEY)!r} must have value 1")
    return ImpressionRecord(
        request_id=obj["request_id"],
        context_id=obj["context_id"],
        recruiter_id=obj["recruiter_id"],
        candidate_id=obj["candidate_id"],
        contract_id=obj["contract_id"],
        label=label,
        features=FeatureVector(entries),
    )


def load_dataset(path) -> Dataset:
    """Read a JSON-lines impression file into a :class:`Dataset`.

    One record per line, order preserved; an intercept feature of value 1
    is appended to every record. Malformed lines raise
    :class:`DatasetFormatError` carrying the 1-based line number.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line, object_pairs_hook=_reject_duplicate_keys)
            except ValueError as exc:
                raise DatasetFormatError(str(exc), line_number) from exc
            if not isinstance(obj, dict):
                raise DatasetFormatError("record is not a JSON object", line_number)
            try:
                records.append(_parse_record(obj))
            except ValueError as exc:
                raise DatasetFormatError(str(exc), line_number) from exc
    return Dataset.build(records)


def save_dataset(d: Dataset, path) -> None:
    """Write records back out in the JSON-lines impression format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in d.records:
            obj = {
                "request_id": r.request_id,
                "context_id": r.context_id,
                "recruiter_id": r.recruiter_id,
                "candidate_id": r.candidate_id,
                "contract_id": r.contract_id,
                "label": r.label,
                "features": r.features.to_strkeys(),
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def group_by_request(d: Dataset) -> dict[str, list[int]]:
    """Partition record indices by request id (query)."""
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(d.records):
        groups.setdefault(r.request_id, []).append(i)
    return groups


def concat_datasets(datasets: Iterable[Dataset]) -> Dataset:
    """Concatenate record lists and rebuild the feature index."""
    records: list[ImpressionRecord] = []
    for d in datasets:
        records.extend(d.records)
    return Dataset.build(records)
