"""Command-line front end.

Every command is a pure function of its inputs, flags, and seed: given
identical arguments it produces byte-identical outputs (JSON is written
with sorted keys and no timestamps). Each run also writes its resolved
configuration next to its outputs as a provenance record.

Exit codes: 0 success, 2 bad arguments, 3 malformed input, 4 training
failure, 5 I/O failure.
"""
from __future__ import annotations

import functools
import json
import os
import sys
from typing import Mapping

import click
from click.core import ParameterSource

from .benchmark import (
    DEFAULT_GRID,
    BenchmarkTable,
    benchmark_variants,
    glmix_margins,
    render_table_csv,
    render_table_text,
    report_for_margins,
)
from .core import (
    DatasetFormatError,
    TrainingError,
    group_by_request,
    load_dataset,
    parse_key,
    save_dataset,
)
from .gbdt import GbdtModel, GbdtTrainConfig, train_gbdt
from .glmix import (
    COMPONENTS,
    GlmixTrainConfig,
    grid_search,
    load_glmix_model,
    ranking_objective,
    save_glmix_model,
    train_glmix,
)
from .synthgen import GeneratorSpec, generate, generate_days, save_truth
from .treefeat import enrich_dataset
from .twolevel import PipelineConfig, rank_two_level, run_daily_pipeline

FULL_LAMBDA_GRID: tuple[tuple[float, float, float], ...] = tuple(
    (g, c, r)
    for g in (1.0, 10.0, 100.0, 1000.0)
    for c in (1.0, 10.0, 100.0, 1000.0)
    for r in (1.0, 10.0, 100.0, 1000.0)
)


def _die(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map domain errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except DatasetFormatError as e:
            _die(3, str(e))
        except TrainingError as e:
            _die(4, str(e))
        except OSError as e:
            _die(5, str(e))

    return wrapper


def _config_option(fn):
    return click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), default=None,
        help="JSON file of defaults for this command's flags; explicit flags win.",
    )(fn)


def _apply_config(ctx: click.Context, config_path: str | None, values: dict) -> dict:
    """Fold config-file values under explicitly passed flags."""
    if config_path is None:
        return values
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"config file {config_path}: {e}")
    if not isinstance(doc, dict):
        raise DatasetFormatError(f"config file {config_path}: expected a JSON object")
    for name, value in doc.items():
        base = name.replace("-", "_")
        key = next(
            (c for c in (base, f"{base}_path", f"{base}_dir", f"{base}_text") if c in values),
            None,
        )
        if key is None:
            raise click.UsageError(f"unknown config key {name!r} in {config_path}")
        if ctx.get_parameter_source(key) == ParameterSource.DEFAULT:
            values[key] = value
    return values


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, (list, dict, str, int, float, bool)) or value is None:
        return value
    return str(value)


def _write_resolved_config(output_path: str, command: str, values: Mapping) -> None:
    doc = {
        "command": command,
        "parameters": {k: _jsonable(v) for k, v in sorted(values.items())},
    }
    if os.path.isdir(output_path):
        target = os.path.join(output_path, "run_config.json")
    else:
        target = output_path + ".config.json"
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_gbdt_model(path: str) -> GbdtModel:
    try:
        return GbdtModel.load(path)
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as e:
        raise DatasetFormatError(f"gbdt model {path}: {e}")


def _load_glmix(path: str):
    try:
        return load_glmix_model(path)
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as e:
        raise DatasetFormatError(f"glmix model {path}: {e}")


def _parse_grid(text: str | None) -> tuple[tuple[float, float, float], ...] | None:
    if text is None:
        return None
    points = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = [p.strip() for p in part.split(",")]
        try:
            nums = [float(p) for p in pieces]
        except ValueError:
            raise click.UsageError(f"bad grid point {part!r}; expected numbers")
        if len(nums) == 1:
            points.append((nums[0], nums[0], nums[0]))
        elif len(nums) == 3:
            points.append(tuple(nums))
        else:
            raise click.UsageError(
                f"bad grid point {part!r}; expected one value or a lambda triple"
            )
    if not points:
        raise click.UsageError("grid is empty")
    return tuple(points)


def _parse_ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise click.UsageError(f"bad --ks value {text!r}; expected integers")
    if not ks or any(k < 1 for k in ks):
        raise click.UsageError("--ks values must be positive integers")
    return ks


def _parse_components(text: str) -> frozenset:
    parts = frozenset(p.strip() for p in text.split(",") if p.strip())
    unknown = parts - set(COMPONENTS)
    if unknown or not parts:
        raise click.UsageError(
            f"--components must name a non-empty subset of {', '.join(COMPONENTS)}"
        )
    return parts


def _build(factory, **kwargs):
    """Construct a config dataclass, mapping validation errors to exit 2."""
    try:
        return factory(**kwargs)
    except ValueError as e:
        raise click.UsageError(str(e))


def _report_dict(report) -> dict:
    return {
        "at_k": {str(k): v for k, v in sorted(report.at_k.items())},
        "log_loss": report.log_loss,
        "auc": report.auc,
        "query_count": report.query_count,
    }


@click.group()
def main():
    """Personalized two-level ranking toolkit."""


@main.command("generate")
@click.option("--output", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--recruiters", default=25, show_default=True)
@click.option("--contracts", default=8, show_default=True)
@click.option("--queries-per-recruiter", default=12, show_default=True)
@click.option("--candidates-per-query", default=30, show_default=True)
@click.option("--features", default=6, show_default=True)
@click.option("--recruiter-scale", default=0.8, show_default=True)
@click.option("--contract-scale", default=0.5, show_default=True)
@click.option("--label-noise", default=0.0, show_default=True)
@click.option(
    "--interaction", "interactions", multiple=True,
    help="Nonlinear pair term as 'ns:name,ns:name,strength'; repeatable.",
)
@click.option(
    "--interaction-flip", default=0.0, show_default=True,
    help="Fraction of recruiters whose pair terms are sign-flipped.",
)
@click.option("--days", default=None, type=int, help="Write day partitions instead of train/validation/test splits.")
@_config_option
@click.pass_context
@_guard
def cmd_generate(ctx, **values):
    """Generate synthetic impressions plus their ground truth."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    terms = []
    for text in v["interactions"]:
        pieces = [p.strip() for p in text.split(",")]
        if len(pieces) != 3:
            raise click.UsageError(f"bad --interaction {text!r}; expected 'ns:name,ns:name,strength'")
        try:
            terms.append((parse_key(pieces[0]), parse_key(pieces[1]), float(pieces[2])))
        except ValueError as e:
            raise click.UsageError(f"bad --interaction {text!r}: {e}")
    spec = _build(
        GeneratorSpec,
        num_recruiters=v["recruiters"],
        num_contracts=v["contracts"],
        queries_per_recruiter=v["queries_per_recruiter"],
        candidates_per_query=v["candidates_per_query"],
        num_ltr_features=v["features"],
        recruiter_deviation_scale=v["recruiter_scale"],
        contract_deviation_scale=v["contract_scale"],
        interaction_spec=tuple(terms),
        interaction_flip_fraction=v["interaction_flip"],
        label_noise=v["label_noise"],
        seed=v["seed"],
    )
    out = v["output"]
    os.makedirs(out, exist_ok=True)
    if v["days"] is not None:
        if v["days"] < 1:
            raise click.UsageError("--days must be >= 1")
        partitions, truth = generate_days(spec, v["days"])
        for day, d in enumerate(partitions):
            save_dataset(d, os.path.join(out, f"day_{day:03d}.jsonl"))
    else:
        train, validation, test, truth = generate(spec)
        save_dataset(train, os.path.join(out, "train.jsonl"))
        save_dataset(validation, os.path.join(out, "validation.jsonl"))
        save_dataset(test, os.path.join(out, "test.jsonl"))
    save_truth(truth, os.path.join(out, "truth.json"))
    _write_resolved_config(out, "generate", v)


@main.command("train-gbdt")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--num-trees", default=100, show_default=True)
@click.option("--max-depth", default=2, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--split-mode", type=click.Choice(["exact", "quantile"]), default="exact", show_default=True)
@click.option("--bins", default=32, show_default=True)
@click.option("--l2-leaf", default=1.0, show_default=True)
@click.option("--min-split-gain", default=0.0, show_default=True)
@click.option("--min-child-hessian", default=1e-3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--loss-trace", default=None, type=click.Path(dir_okay=False), help="Write per-round training loss values.")
@_config_option
@click.pass_context
@_guard
def cmd_train_gbdt(ctx, **values):
    """Train the boosted forest on a JSONL dataset."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    cfg = _build(
        GbdtTrainConfig,
        num_trees=v["num_trees"],
        max_depth=v["max_depth"],
        learning_rate=v["learning_rate"],
        split_mode=v["split_mode"],
        bins=v["bins"],
        l2_leaf=v["l2_leaf"],
        min_split_gain=v["min_split_gain"],
        min_child_hessian=v["min_child_hessian"],
        seed=v["seed"],
    )
    d = load_dataset(v["input_path"])
    trace: list | None = [] if v["loss_trace"] else None
    model = train_gbdt(d, cfg, loss_trace=trace)
    model.save(v["output"])
    if v["loss_trace"]:
        with open(v["loss_trace"], "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{value!r}\n" for value in trace)
    _write_resolved_config(v["output"], "train-gbdt", v)


@main.command("extract")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--l2-model", "l2_model_path", default=None, type=click.Path(dir_okay=False, exists=True), help="Separate forest for the interaction features.")
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--score-probability", is_flag=True, help="Emit sigmoid(margin) instead of the raw margin as the score feature.")
@_config_option
@click.pass_context
@_guard
def cmd_extract(ctx, **values):
    """Write the enriched dataset: raw, score, and interaction features."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    model = _load_gbdt_model(v["model_path"])
    interaction_model = _load_gbdt_model(v["l2_model_path"]) if v["l2_model_path"] else None
    d = load_dataset(v["input_path"])
    enriched = enrich_dataset(
        model, d, as_probability=v["score_probability"], interaction_model=interaction_model,
    )
    save_dataset(enriched, v["output"])
    _write_resolved_config(v["output"], "extract", v)


def _glmix_cfg_from(v: Mapping) -> GlmixTrainConfig:
    return _build(
        GlmixTrainConfig,
        lambda_global=v["lambda_global"],
        lambda_contract=v["lambda_contract"],
        lambda_recruiter=v["lambda_recruiter"],
        outer_passes=v["outer_passes"],
        enabled_components=_parse_components(v["components"]),
    )


def _glmix_options(fn):
    for option in reversed(
        [
            click.option("--lambda-global", default=100.0, show_default=True),
            click.option("--lambda-contract", default=100.0, show_default=True),
            click.option("--lambda-recruiter", default=100.0, show_default=True),
            click.option("--outer-passes", default=3, show_default=True),
            click.option("--components", default="global,contract,recruiter", show_default=True),
            click.option("--workers", default=None, type=int, help="Thread cap for per-entity fits (default: machine cores)."),
        ]
    ):
        fn = option(fn)
    return fn


def _worker_count(v: Mapping) -> int:
    return v["workers"] if v["workers"] is not None else (os.cpu_count() or 1)


@main.command("train-glmix")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--output", required=True, type=click.Path(), help="A .json file or a model-store directory.")
@_glmix_options
@_config_option
@click.pass_context
@_guard
def cmd_train_glmix(ctx, **values):
    """Train the mixed model on an enriched JSONL dataset."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    cfg = _glmix_cfg_from(v)
    d = load_dataset(v["input_path"])
    model = train_glmix(d, cfg, workers=_worker_count(v))
    metadata = {
        "lambdas": {
            "global": cfg.lambda_global,
            "contract": cfg.lambda_contract,
            "recruiter": cfg.lambda_recruiter,
        },
        "outer_passes": cfg.outer_passes,
        "training_records": d.n,
    }
    if not v["output"].endswith(".json"):
        os.makedirs(v["output"], exist_ok=True)
    save_glmix_model(model, v["output"], metadata=metadata)
    _write_resolved_config(v["output"], "train-glmix", v)


@main.command("grid")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--validation", "validation_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--grid", "grid_text", default=None, help="Semicolon-separated lambda triples, e.g. '1,1,1;10,10,10'. Default: the full {1,10,100,1000}^3 cross product.")
@click.option("--objective-k", default=25, show_default=True)
@click.option("--model-output", default=None, type=click.Path(), help="Also save the best model here.")
@_glmix_options
@_config_option
@click.pass_context
@_guard
def cmd_grid(ctx, **values):
    """Grid-search the regularization triple on a validation split."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    grid = _parse_grid(v["grid_text"]) or FULL_LAMBDA_GRID
    base_cfg = _glmix_cfg_from(v)
    train = load_dataset(v["input_path"])
    validation = load_dataset(v["validation_path"])
    result = grid_search(
        train, validation, grid,
        objective=ranking_objective(v["objective_k"]),
        base_cfg=base_cfg, workers=_worker_count(v),
    )
    doc = {
        "best": list(result.best),
        "objective": f"positive_responses_at_{v['objective_k']}",
        "table": [
            {"lambdas": list(point), "metric": metric} for point, metric in result.table
        ],
    }
    with open(v["output"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    if v["model_output"]:
        if not v["model_output"].endswith(".json"):
            os.makedirs(v["model_output"], exist_ok=True)
        save_glmix_model(result.best_model, v["model_output"], metadata={"lambdas": {
            "global": result.best[0], "contract": result.best[1], "recruiter": result.best[2],
        }})
    _write_resolved_config(v["output"], "grid", v)


@main.command("rank")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--l1-model", "l1_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--l2-model", "l2_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--model", "glmix_path", required=True, type=click.Path(exists=True), help="Mixed model (.json file or store directory).")
@click.option("--k1", default=50, show_default=True)
@click.option("--k2", default=10, show_default=True)
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@_config_option
@click.pass_context
@_guard
def cmd_rank(ctx, **values):
    """Two-level ranking of each query; writes one JSON line per query."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    cfg = _build(
        PipelineConfig,
        k1=v["k1"],
        k2=v["k2"],
        l1_model=_load_gbdt_model(v["l1_path"]),
        l2_interaction_model=_load_gbdt_model(v["l2_path"]),
        glmix=_load_glmix(v["glmix_path"]),
    )
    d = load_dataset(v["input_path"])
    lines = []
    for request_id, indices in sorted(group_by_request(d).items()):
        l1, l2 = rank_two_level([d.records[i] for i in indices], cfg)
        l1_scores = {item.candidate_id: item.score for item in l1.items}
        lines.append(
            {
                "request_id": request_id,
                "ranked": [
                    {
                        "candidate_id": item.candidate_id,
                        "l1_score": l1_scores[item.candidate_id],
                        "l2_score": item.score,
                    }
                    for item in l2.items
                ],
            }
        )
    with open(v["output"], "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(json.dumps(line, sort_keys=True) + "\n" for line in lines)
    _write_resolved_config(v["output"], "rank", v)


@main.command("eval")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--model", "glmix_path", required=True, type=click.Path(exists=True))
@click.option("--l1-model", "l1_path", default=None, type=click.Path(dir_okay=False, exists=True), help="Enrich raw input through this forest first.")
@click.option("--l2-model", "l2_path", default=None, type=click.Path(dir_okay=False, exists=True), help="Interaction-feature forest (defaults to --l1-model).")
@click.option("--ks", default="1,5,25", show_default=True)
@click.option("--output", default=None, type=click.Path(dir_okay=False))
@_config_option
@click.pass_context
@_guard
def cmd_eval(ctx, **values):
    """Score a dataset with the mixed model and report ranking metrics."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    ks = _parse_ks(v["ks"])
    model = _load_glmix(v["glmix_path"])
    d = load_dataset(v["input_path"])
    if v["l1_path"]:
        l1 = _load_gbdt_model(v["l1_path"])
        l2 = _load_gbdt_model(v["l2_path"]) if v["l2_path"] else None
        d = enrich_dataset(l1, d, interaction_model=l2)
    report = report_for_margins(d, glmix_margins(model, d), ks)
    doc = _report_dict(report)
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if v["output"]:
        with open(v["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _write_resolved_config(v["output"], "eval", v)
    click.echo(text, nl=False)


@main.command("pipeline")
@click.option("--input", "input_dir", required=True, type=click.Path(file_okay=False, exists=True), help="Directory of day_*.jsonl partitions.")
@click.option("--l1-model", "l1_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--l2-model", "l2_path", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--window-days", default=45, show_default=True)
@click.option("--k1", default=50, show_default=True)
@click.option("--k2", default=10, show_default=True)
@click.option("--ks", default="1,5,25", show_default=True)
@click.option("--output", required=True, type=click.Path(file_okay=False))
@_glmix_options
@_config_option
@click.pass_context
@_guard
def cmd_pipeline(ctx, **values):
    """Sliding-window daily replay: train, evaluate, and store per day."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    ks = _parse_ks(v["ks"])
    if v["window_days"] < 1:
        raise click.UsageError("--window-days must be >= 1")
    if v["k2"] > v["k1"]:
        raise click.UsageError(f"k2 ({v['k2']}) must not exceed k1 ({v['k1']})")
    day_files = sorted(
        f for f in os.listdir(v["input_dir"]) if f.startswith("day_") and f.endswith(".jsonl")
    )
    if not day_files:
        raise click.UsageError(f"no day_*.jsonl partitions in {v['input_dir']}")
    partitions = [load_dataset(os.path.join(v["input_dir"], f)) for f in day_files]
    cfg = _glmix_cfg_from(v)
    out = v["output"]
    os.makedirs(out, exist_ok=True)
    try:
        results = run_daily_pipeline(
            partitions,
            v["window_days"],
            _load_gbdt_model(v["l1_path"]),
            _load_gbdt_model(v["l2_path"]),
            cfg,
            k1=v["k1"],
            k2=v["k2"],
            ks=ks,
            store_dir=os.path.join(out, "store"),
            workers=_worker_count(v),
        )
    except ValueError as e:
        raise click.UsageError(str(e))
    with open(os.path.join(out, "metrics.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
        for r in results:
            fh.write(json.dumps({"day": r.day, **_report_dict(r.metrics)}, sort_keys=True) + "\n")
    _write_resolved_config(out, "pipeline", v)


@main.command("benchmark")
@click.option("--input", "input_dir", required=True, type=click.Path(file_okay=False, exists=True), help="Directory holding train.jsonl, validation.jsonl, test.jsonl.")
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "jsonl"]), default="text", show_default=True)
@click.option("--grid", "grid_text", default=None, help="Semicolon-separated lambda triples; default 1;10;100;1000 on the diagonal.")
@click.option("--num-trees", default=100, show_default=True)
@click.option("--max-depth", default=2, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--split-mode", type=click.Choice(["exact", "quantile"]), default="exact", show_default=True)
@click.option("--outer-passes", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=None, type=int)
@_config_option
@click.pass_context
@_guard
def cmd_benchmark(ctx, **values):
    """Train all seven variants and emit the lift table."""
    v = _apply_config(ctx, values.pop("config_path"), values)
    grid = _parse_grid(v["grid_text"]) or DEFAULT_GRID
    gbdt_cfg = _build(
        GbdtTrainConfig,
        num_trees=v["num_trees"],
        max_depth=v["max_depth"],
        learning_rate=v["learning_rate"],
        split_mode=v["split_mode"],
        seed=v["seed"],
    )
    glmix_base = _build(GlmixTrainConfig, outer_passes=v["outer_passes"])
    splits = {}
    for name in ("train", "validation", "test"):
        path = os.path.join(v["input_dir"], f"{name}.jsonl")
        if not os.path.exists(path):
            raise click.UsageError(f"missing {name}.jsonl in {v['input_dir']}")
        splits[name] = load_dataset(path)
    table = benchmark_variants(
        splits["train"], splits["validation"], splits["test"],
        gbdt_cfg=gbdt_cfg, grid=grid, glmix_base=glmix_base,
        workers=v["workers"] if v["workers"] is not None else (os.cpu_count() or 1),
    )
    text = _render_benchmark(table, v["fmt"])
    with open(v["output"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    _write_resolved_config(v["output"], "benchmark", v)
    click.echo(text, nl=False)


def _render_benchmark(table: BenchmarkTable, fmt: str) -> str:
    if fmt == "text":
        return render_table_text(table)
    if fmt == "csv":
        return render_table_csv(table)
    lines = []
    for row in table.rows:
        lines.append(
            json.dumps(
                {
                    "variant": row.name,
                    "lambdas": None if row.lambdas is None else list(row.lambdas),
                    "at_k": {str(k): v for k, v in sorted(row.report.at_k.items())},
                    "lifts": None if row.lifts is None else {str(k): v for k, v in sorted(row.lifts.items())},
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    main()
