#!/usr/bin/env python3
"""Timing comparison of the compiled and pure-NumPy kernel backends.

Runs the two hot kernels (``scan_split``, ``route_tree``) on identical
inputs under each importable backend, then trains and scores a full
forest with each backend patched into the dispatch. Every comparison
also asserts that the backends agree bit for bit, which is the property
that lets the package swap them freely at import time.

Usage::

    python benchmarks/bench_kernels.py [--repeats N] [--quick]
"""
from __future__ import annotations

import argparse
import time
from contextlib import contextmanager

import numpy as np

from mixrank import _kernels
from mixrank._kernels import available_backends
from mixrank.core import concat_datasets
from mixrank.gbdt import GbdtTrainConfig, batch_margins, model_to_json, train_gbdt
from mixrank.synthgen import GeneratorSpec, generate


def best_of(fn, repeats: int) -> float:
    """Minimum wall time of ``fn`` over ``repeats`` calls (after one warmup)."""
    fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


@contextmanager
def use_backend(impl):
    """Temporarily route the package's kernel dispatch through ``impl``."""
    saved = (_kernels.scan_split, _kernels.route_tree)
    _kernels.scan_split = impl.scan_split
    _kernels.route_tree = impl.route_tree
    try:
        yield
    finally:
        _kernels.scan_split, _kernels.route_tree = saved


# -- input builders --------------------------------------------------------


def make_scan_inputs(n: int, num_candidates: int, seed: int):
    rng = np.random.default_rng(seed)
    grad = rng.standard_normal(n)
    hess = rng.uniform(0.01, 0.25, n)
    if num_candidates >= n - 1:
        candidates = np.arange(n - 1, dtype=np.int64)
    else:
        candidates = np.unique(rng.integers(0, n - 1, size=num_candidates)).astype(np.int64)
    g_miss = float(rng.standard_normal())
    h_miss = float(rng.uniform(0.1, 2.0))
    return grad, hess, candidates, g_miss, h_miss, 1.0, 0.0, 1e-3


def make_route_inputs(rows: int, depth: int, num_features: int, seed: int):
    rng = np.random.default_rng(seed)
    internal = 2**depth - 1
    total = 2 ** (depth + 1) - 1
    feature = np.full(total, -1, dtype=np.int32)
    threshold = np.zeros(total)
    left = np.zeros(total, dtype=np.int32)
    right = np.zeros(total, dtype=np.int32)
    default_left = np.zeros(total, dtype=np.uint8)
    feature[:internal] = rng.integers(0, num_features, size=internal)
    threshold[:internal] = rng.uniform(0.0, 1.0, size=internal)
    default_left[:internal] = rng.integers(0, 2, size=internal)
    nodes = np.arange(internal, dtype=np.int32)
    left[:internal] = 2 * nodes + 1
    right[:internal] = 2 * nodes + 2
    X = rng.uniform(0.0, 1.0, size=(rows, num_features))
    X[rng.random((rows, num_features)) < 0.1] = np.nan
    return X, feature, threshold, left, right, default_left


# -- benchmark sections ----------------------------------------------------


def fmt_time(seconds: float) -> str:
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    if seconds < 1.0:
        return f"{seconds * 1e3:8.2f} ms"
    return f"{seconds:8.2f} s "


def print_row(label: str, times: dict[str, float]) -> None:
    cells = "".join(fmt_time(times[name]) for name in sorted(times))
    if len(times) == 2:
        ratio = times["python"] / times["cython"]
        cells += f"{ratio:9.1f}x"
    print(f"  {label:<34}{cells}")


def print_header(title: str, backends: dict) -> None:
    names = "".join(f"{name:>11}" for name in sorted(backends))
    speedup = f"{'speedup':>10}" if len(backends) == 2 else ""
    print(f"\n{title}")
    print(f"  {'':<34}{names}{speedup}")


def bench_scan(backends: dict, repeats: int, cases) -> None:
    print_header("scan_split (one feature, one node)", backends)
    for n, c in cases:
        args = make_scan_inputs(n, c, seed=n + c)
        results = {name: impl.scan_split(*args) for name, impl in backends.items()}
        assert len(set(results.values())) == 1, f"backends disagree on scan_split: {results}"
        times = {name: best_of(lambda impl=impl: impl.scan_split(*args), repeats) for name, impl in backends.items()}
        print_row(f"n={n:<7} candidates={len(args[2])}", times)


def bench_route(backends: dict, repeats: int, cases) -> None:
    print_header("route_tree (one tree, all rows)", backends)
    for rows, depth in cases:
        args = make_route_inputs(rows, depth, num_features=20, seed=rows + depth)
        results = {name: impl.route_tree(*args) for name, impl in backends.items()}
        first, *rest = results.values()
        assert all(np.array_equal(first, other) for other in rest), "backends disagree on route_tree"
        times = {name: best_of(lambda impl=impl: impl.route_tree(*args), repeats) for name, impl in backends.items()}
        print_row(f"rows={rows:<7} depth={depth}", times)


def bench_end_to_end(backends: dict, quick: bool) -> None:
    spec = GeneratorSpec(
        num_recruiters=15 if quick else 30,
        num_contracts=8,
        queries_per_recruiter=6,
        candidates_per_query=40,
        num_ltr_features=10,
        interaction_spec=((("ltr", "f0"), ("ltr", "f1"), 2.0),),
        seed=7,
    )
    train, validation, test, _ = generate(spec)
    d = concat_datasets([train, validation, test])
    cfg = GbdtTrainConfig(num_trees=10 if quick else 30, max_depth=3, learning_rate=0.2, split_mode="exact", seed=3)

    print_header(f"train_gbdt + batch_margins ({d.n} records, {cfg.num_trees} trees, exact splits)", backends)
    models: dict[str, str] = {}
    margins: dict[str, np.ndarray] = {}
    train_times: dict[str, float] = {}
    score_times: dict[str, float] = {}
    for name, impl in backends.items():
        with use_backend(impl):
            start = time.perf_counter()
            model = train_gbdt(d, cfg)
            train_times[name] = time.perf_counter() - start
            start = time.perf_counter()
            margins[name] = batch_margins(model, d)
            score_times[name] = time.perf_counter() - start
            models[name] = model_to_json(model)
    assert len(set(models.values())) == 1, "backends trained different models"
    first, *rest = margins.values()
    assert all(np.array_equal(first, other) for other in rest), "backends scored differently"
    print_row("training", train_times)
    print_row("batch scoring", score_times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats per case (best-of)")
    parser.add_argument("--quick", action="store_true", help="smaller cases for a fast smoke run")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(sorted(backends))}")
    print(f"backend selected at import: {_kernels.BACKEND}")
    if len(backends) < 2:
        print("(compiled extension not built; timing the NumPy backend alone)")

    scan_cases = [(1_000, 64), (10_000, 255), (10_000, 10_000)]
    route_cases = [(10_000, 6), (100_000, 6)]
    if not args.quick:
        scan_cases.append((100_000, 1024))
        route_cases.append((500_000, 8))

    bench_scan(backends, args.repeats, scan_cases)
    bench_route(backends, args.repeats, route_cases)
    bench_end_to_end(backends, args.quick)
    print("\nagreement: all outputs bit-identical across backends")


if __name__ == "__main__":
    main()
