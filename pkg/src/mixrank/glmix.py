"""Mixed-effect logistic regression trained by block coordinate descent.

The model is a sum of sparse linear components: one fixed (global)
coefficient vector shared by every impression, plus per-recruiter and
per-contract random-effect vectors. Training cycles through the
components; each update re-fits one component's coefficients by
L2-regularized logistic regression with the other components' scores
held fixed as per-record offsets. Entities never seen in training have
no stored vector and contribute exactly zero at scoring time, so unseen
ids fall back to the remaining components.

The inner solver is a damped Newton method with an Armijo backtracking
line search, started from zero. The subproblems are strictly convex
(lambda > 0), so every fit has a unique minimizer and training is
deterministic regardless of worker count.
"""
from __future__ import annotations

import json
import logging
import math
import os
import urllib.parse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.special import expit

from .core import (
    Dataset,
    EntityKind,
    FeatureKey,
    FeatureVector,
    TrainingError,
    dot,
    format_key,
    group_by_entity,
    group_by_request,
    parse_key,
    sigmoid,
)
from .metrics import topk_positive_mean

logger = logging.getLogger(__name__)

# A coefficient vector is structurally a feature vector: a finite-valued
# sparse map where an absent key means 0.
CoefficientVector = FeatureVector

GLOBAL = "global"
CONTRACT = "contract"
RECRUITER = "recruiter"
COMPONENTS = (GLOBAL, CONTRACT, RECRUITER)

_KIND_OF_COMPONENT = {CONTRACT: EntityKind.CONTRACT, RECRUITER: EntityKind.RECRUITER}

# Problems below this size are solved on a dense matrix; above it the
# design matrix is assembled sparse (interaction indicators make the
# global fit wide but very sparse).
_DENSE_CELL_LIMIT = 2_000_000


@dataclass(frozen=True)
class GlmixTrainConfig:
    lambda_global: float = 100.0
    lambda_contract: float = 100.0
    lambda_recruiter: float = 100.0
    outer_passes: int = 3
    solver_tolerance: float = 1e-6
    max_solver_iterations: int = 50
    enabled_components: frozenset = frozenset(COMPONENTS)
    # Per-component namespace restriction; None means all namespaces.
    feature_config: Mapping[str, frozenset | None] | None = None

    def __post_init__(self):
        for name in ("lambda_global", "lambda_contract", "lambda_recruiter"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.outer_passes < 1:
            raise ValueError("outer_passes must be >= 1")
        if self.solver_tolerance <= 0:
            raise ValueError("solver_tolerance must be positive")
        if self.max_solver_iterations < 1:
            raise ValueError("max_solver_iterations must be >= 1")
        enabled = frozenset(self.enabled_components)
        unknown = enabled - set(COMPONENTS)
        if unknown or not enabled:
            raise ValueError(f"enabled_components must be a non-empty subset of {set(COMPONENTS)}")
        object.__setattr__(self, "enabled_components", enabled)
        config = {c: None for c in COMPONENTS}
        if self.feature_config is not None:
            for comp, namespaces in self.feature_config.items():
                if comp not in COMPONENTS:
                    raise ValueError(f"unknown component {comp!r} in feature_config")
                config[comp] = None if namespaces is None else frozenset(namespaces)
        object.__setattr__(self, "feature_config", config)

    def component_lambda(self, component: str) -> float:
        return {
            GLOBAL: self.lambda_global,
            CONTRACT: self.lambda_contract,
            RECRUITER: self.lambda_recruiter,
        }[component]


@dataclass(frozen=True)
class GlmixModel:
    """A fixed effect plus per-entity random effects.

    ``random_effects`` only holds entities observed in training; scoring
    any other id adds exactly zero for that component.
    """

    fixed: CoefficientVector
    random_effects: Mapping[EntityKind, Mapping[str, CoefficientVector]]
    feature_config: Mapping[str, frozenset | None]

    def score(self, x: FeatureVector, recruiter_id: str, contract_id: str) -> tuple[float, float]:
        margin = dot(self.fixed, x)
        co = self.random_effects.get(EntityKind.CONTRACT, {}).get(contract_id)
        if co is not None:
            margin += dot(co, x)
        re = self.random_effects.get(EntityKind.RECRUITER, {}).get(recruiter_id)
        if re is not None:
            margin += dot(re, x)
        return margin, sigmoid(margin)


def score(m: GlmixModel, x: FeatureVector, recruiter_id: str, contract_id: str) -> tuple[float, float]:
    return m.score(x, recruiter_id, contract_id)


# -- inner solver ----------------------------------------------------------


def fit_glm(
    rows: Sequence[tuple[FeatureVector, int, float]],
    lam: float,
    restrict: Iterable[str] | None = None,
    tol: float = 1e-6,
    max_iter: int = 50,
    context: str = "glm",
) -> CoefficientVector:
    """Minimize sum_i log(1+exp(-(2y_i-1)(offset_i + beta.x_i))) + lam/2 |beta|^2.

    ``rows`` holds (features, label, offset) triples; only features in
    the ``restrict`` namespaces enter the fit (None means all). Empty
    input returns the exact zero vector, the regularizer's minimizer.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not rows:
        return FeatureVector()
    allowed = None if restrict is None else frozenset(restrict)
    keys = sorted(
        {k for x, _, _ in rows for k in x if allowed is None or k[0] in allowed}
    )
    if not keys:
        return FeatureVector()
    col = {k: i for i, k in enumerate(keys)}
    n, m = len(rows), len(keys)
    y = np.fromiter((r[1] for r in rows), dtype=np.float64, count=n)
    offsets = np.fromiter((r[2] for r in rows), dtype=np.float64, count=n)
    if n * m <= _DENSE_CELL_LIMIT:
        X = np.zeros((n, m))
        for i, (x, _, _) in enumerate(rows):
            for key, value in x.items():
                j = col.get(key)
                if j is not None:
                    X[i, j] = value
    else:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for x, _, _ in rows:
            for key in sorted(x):
                j = col.get(key)
                if j is not None:
                    indices.append(j)
                    data.append(x[key])
            indptr.append(len(indices))
        X = scipy.sparse.csr_matrix((data, indices, indptr), shape=(n, m))
    w = _newton_logistic(X, y, offsets, lam, tol, max_iter, context)
    return FeatureVector({k: float(w[i]) for k, i in col.items() if w[i] != 0.0})


def _penalized_nll(y: np.ndarray, eta: np.ndarray, lam: float, w: np.ndarray) -> float:
    z = 2.0 * y - 1.0
    return float(np.logaddexp(0.0, -z * eta).sum() + 0.5 * lam * (w @ w))


def _newton_logistic(X, y, offsets, lam, tol, max_iter, context):
    m = X.shape[1]
    w = np.zeros(m)
    eta = offsets.copy()
    fval = _penalized_nll(y, eta, lam, w)
    for _ in range(max_iter):
        p = expit(eta)
        grad = X.T @ (p - y) + lam * w
        if not np.all(np.isfinite(grad)) or not math.isfinite(fval):
            raise TrainingError(f"non-finite objective while fitting {context}")
        if float(np.linalg.norm(grad)) <= tol:
            return w
        s = p * (1.0 - p)
        if scipy.sparse.issparse(X):
            H = (X.multiply(s[:, None])).T @ X
            H = H.toarray()
        else:
            H = (X * s[:, None]).T @ X
        H[np.diag_indices_from(H)] += lam
        try:
            step = scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), -grad)
        except scipy.linalg.LinAlgError:
            step = scipy.linalg.lstsq(H, -grad)[0]
        descent = float(grad @ step)
        t = 1.0
        while True:
            w_new = w + t * step
            eta_new = offsets + X @ w_new
            f_new = _penalized_nll(y, eta_new, lam, w_new)
            if f_new <= fval + 1e-4 * t * descent:
                break
            t *= 0.5
            if t < 1e-12:
                # No further progress representable; already at optimum.
                return w
        w, eta, fval = w_new, eta_new, f_new
    p = expit(eta)
    grad = X.T @ (p - y) + lam * w
    gnorm = float(np.linalg.norm(grad))
    if gnorm > tol:
        logger.warning("glm fit for %s stopped at max_iter with gradient norm %.3e > tol %.3e", context, gnorm, tol)
    return w


# -- block coordinate descent ---------------------------------------------


def _contribution(coef: CoefficientVector, d: Dataset, indices: Sequence[int] | None = None) -> np.ndarray:
    rows = range(d.n) if indices is None else indices
    return np.fromiter((dot(coef, d.records[i].features) for i in rows), dtype=np.float64)


def _penalty(cfg: GlmixTrainConfig, fixed: CoefficientVector, effects: Mapping) -> float:
    total = 0.5 * cfg.lambda_global * sum(v * v for v in fixed.values())
    for component, kind in _KIND_OF_COMPONENT.items():
        lam = cfg.component_lambda(component)
        for coef in effects[kind].values():
            total += 0.5 * lam * sum(v * v for v in coef.values())
    return total


def train_glmix(
    d: Dataset,
    cfg: GlmixTrainConfig,
    trace_hook: Callable[[int, str, float], None] | None = None,
    workers: int | None = None,
) -> GlmixModel:
    """Fit the mixed model by cyclic component updates.

    Update order within a pass is fixed effect, then contract, then
    recruiter. Each component is re-fit against offsets equal to the
    total score minus its own contribution, then the totals are
    refreshed. ``trace_hook``, when given, receives
    (pass_index, component, penalized objective) after every update.
    """
    if d.n == 0:
        raise TrainingError("cannot train on an empty dataset")
    y = d.labels()
    order = [c for c in COMPONENTS if c in cfg.enabled_components]
    groups = {kind: group_by_entity(d, kind) for kind in _KIND_OF_COMPONENT.values()}

    fixed: CoefficientVector = FeatureVector()
    effects: dict[EntityKind, dict[str, CoefficientVector]] = {k: {} for k in _KIND_OF_COMPONENT.values()}
    contrib = {c: np.zeros(d.n) for c in order}
    total = np.zeros(d.n)

    for pass_index in range(cfg.outer_passes):
        for component in order:
            offsets = total - contrib[component]
            lam = cfg.component_lambda(component)
            namespaces = cfg.feature_config[component]
            if component == GLOBAL:
                rows = [
                    (r.features, r.label, float(offsets[i]))
                    for i, r in enumerate(d.records)
                ]
                fixed = fit_glm(
                    rows, lam, namespaces, cfg.solver_tolerance,
                    cfg.max_solver_iterations, context="fixed effect",
                )
                contrib[component] = _contribution(fixed, d)
            else:
                kind = _KIND_OF_COMPONENT[component]
                fitted = _fit_entities(
                    d, groups[kind], offsets, lam, namespaces, cfg, component, workers,
                )
                effects[kind] = fitted
                updated = np.zeros(d.n)
                for entity_id, indices in groups[kind].items():
                    updated[indices] = _contribution(fitted[entity_id], d, indices)
                contrib[component] = updated
            total = sum(contrib.values())
            if trace_hook is not None:
                objective = _penalized_nll(y, total, 0.0, np.zeros(0)) + _penalty(cfg, fixed, effects)
                trace_hook(pass_index, component, objective)

    return GlmixModel(
        fixed=fixed,
        random_effects={k: dict(v) for k, v in effects.items()},
        feature_config=dict(cfg.feature_config),
    )


def _fit_entities(d, group, offsets, lam, namespaces, cfg, component, workers):
    def fit_one(entity_id: str) -> tuple[str, CoefficientVector]:
        indices = group[entity_id]
        rows = [
            (d.records[i].features, d.records[i].label, float(offsets[i]))
            for i in indices
        ]
        coef = fit_glm(
            rows, lam, namespaces, cfg.solver_tolerance,
            cfg.max_solver_iterations, context=f"{component}/{entity_id}",
        )
        return entity_id, coef

    entity_ids = sorted(group)
    if workers is not None and workers > 1 and len(entity_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(fit_one, entity_ids))
    return dict(fit_one(e) for e in entity_ids)


def penalized_objective(m: GlmixModel, d: Dataset, cfg: GlmixTrainConfig) -> float:
    """The quantity train_glmix descends: total logistic loss plus every
    component's L2 penalty."""
    y = d.labels()
    margins = np.fromiter(
        (m.score(r.features, r.recruiter_id, r.contract_id)[0] for r in d.records),
        dtype=np.float64,
    )
    effects = {kind: m.random_effects.get(kind, {}) for kind in _KIND_OF_COMPONENT.values()}
    return _penalized_nll(y, margins, 0.0, np.zeros(0)) + _penalty(cfg, m.fixed, effects)


# -- hyper-parameter grid search -------------------------------------------


@dataclass(frozen=True)
class GridSearchResult:
    best: tuple[float, float, float]
    table: tuple[tuple[tuple[float, float, float], float], ...]
    best_model: GlmixModel = field(repr=False, compare=False, default=None)


def ranking_objective(k: int = 25) -> Callable[[GlmixModel, Dataset], float]:
    """Mean count of positives in the top k of each request's ranking."""

    def evaluate(m: GlmixModel, validation: Dataset) -> float:
        label_lists = []
        for _, indices in sorted(group_by_request(validation).items()):
            scored = sorted(
                (
                    (-m.score(r.features, r.recruiter_id, r.contract_id)[0], r.candidate_id, r.label)
                    for r in (validation.records[i] for i in indices)
                ),
            )
            label_lists.append([label for _, _, label in scored])
        return topk_positive_mean(label_lists, k)

    return evaluate


def grid_search(
    train: Dataset,
    validation: Dataset,
    grid: Sequence[tuple[float, float, float]],
    objective: Callable[[GlmixModel, Dataset], float] | None = None,
    base_cfg: GlmixTrainConfig | None = None,
    workers: int | None = None,
) -> GridSearchResult:
    """Train one model per (lambda_global, lambda_contract, lambda_recruiter)
    point and keep the best validation score.

    Ties prefer stronger regularization: the largest triple by sum, then
    the lexicographically largest.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    if objective is None:
        objective = ranking_objective(25)
    base = base_cfg if base_cfg is not None else GlmixTrainConfig()
    table = []
    best = None  # (metric, sum, triple, model)
    for point in grid:
        lg, lco, lre = (float(v) for v in point)
        cfg = replace(base, lambda_global=lg, lambda_contract=lco, lambda_recruiter=lre)
        try:
            model = train_glmix(train, cfg, workers=workers)
        except TrainingError as e:
            raise TrainingError(f"grid point ({lg:g}, {lco:g}, {lre:g}): {e}") from e
        metric = float(objective(model, validation))
        triple = (lg, lco, lre)
        table.append((triple, metric))
        rank = (metric, lg + lco + lre, triple)
        if best is None or rank > best[0]:
            best = (rank, model)
    return GridSearchResult(best=best[0][2], table=tuple(table), best_model=best[1])


# -- persistence ------------------------------------------------------------


def _coef_to_dict(coef: CoefficientVector) -> dict[str, float]:
    return coef.to_strkeys()


def _coef_from_dict(obj: Mapping[str, float]) -> CoefficientVector:
    return FeatureVector.from_strkeys(obj)


def _feature_config_to_json(config: Mapping[str, frozenset | None]) -> dict:
    return {c: (None if ns is None else sorted(ns)) for c, ns in config.items()}


def _feature_config_from_json(obj: Mapping) -> dict:
    return {c: (None if ns is None else frozenset(ns)) for c, ns in obj.items()}


def _dump_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def model_to_dict(m: GlmixModel, metadata: Mapping | None = None) -> dict:
    return {
        "version": 1,
        "kind": "glmix",
        "feature_config": _feature_config_to_json(m.feature_config),
        "fixed": _coef_to_dict(m.fixed),
        "random_effects": {
            kind.value: {eid: _coef_to_dict(c) for eid, c in m.random_effects.get(kind, {}).items()}
            for kind in _KIND_OF_COMPONENT.values()
        },
        "metadata": dict(metadata) if metadata else {},
    }


def model_from_dict(doc: Mapping) -> GlmixModel:
    if doc.get("version") != 1 or doc.get("kind") != "glmix":
        raise ValueError("not a version-1 glmix model document")
    return GlmixModel(
        fixed=_coef_from_dict(doc["fixed"]),
        random_effects={
            EntityKind(kind): {eid: _coef_from_dict(c) for eid, c in entities.items()}
            for kind, entities in doc["random_effects"].items()
        },
        feature_config=_feature_config_from_json(doc["feature_config"]),
    )


def save_glmix_model(m: GlmixModel, path, metadata: Mapping | None = None) -> None:
    """Write either a single JSON document (path ending in .json) or a
    directory-backed store: manifest.json, fixed.json, and one document
    per entity under <kind>/<quoted entity_id>.json."""
    path = os.fspath(path)
    if path.endswith(".json"):
        _dump_json(model_to_dict(m, metadata), path)
        return
    os.makedirs(path, exist_ok=True)
    documents: dict = {"fixed": "fixed.json"}
    _dump_json(_coef_to_dict(m.fixed), os.path.join(path, "fixed.json"))
    for kind in _KIND_OF_COMPONENT.values():
        entities = m.random_effects.get(kind, {})
        kind_dir = os.path.join(path, kind.value)
        os.makedirs(kind_dir, exist_ok=True)
        entity_docs = {}
        for entity_id in sorted(entities):
            rel = f"{kind.value}/{urllib.parse.quote(entity_id, safe='')}.json"
            entity_docs[entity_id] = rel
            _dump_json(_coef_to_dict(entities[entity_id]), os.path.join(path, rel))
        documents[kind.value] = entity_docs
    manifest = {
        "version": 1,
        "kind": "glmix",
        "feature_config": _feature_config_to_json(m.feature_config),
        "documents": documents,
        "metadata": dict(metadata) if metadata else {},
    }
    _dump_json(manifest, os.path.join(path, "manifest.json"))


def load_glmix_model(path) -> GlmixModel:
    path = os.fspath(path)
    if not os.path.isdir(path):
        with open(path, "r", encoding="utf-8") as fh:
            return model_from_dict(json.load(fh))
    with open(os.path.join(path, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version") != 1 or manifest.get("kind") != "glmix":
        raise ValueError("not a version-1 glmix model store")

    def read_coef(rel):
        with open(os.path.join(path, rel), "r", encoding="utf-8") as fh:
            return _coef_from_dict(json.load(fh))

    documents = manifest["documents"]
    random_effects = {}
    for kind in _KIND_OF_COMPONENT.values():
        entity_docs = documents.get(kind.value, {})
        random_effects[kind] = {eid: read_coef(rel) for eid, rel in entity_docs.items()}
    return GlmixModel(
        fixed=read_coef(documents["fixed"]),
        random_effects=random_effects,
        feature_config=_feature_config_from_json(manifest["feature_config"]),
    )
