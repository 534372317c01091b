"""Command-line front end: generate, fit, infer, evaluate, bench.

Primary outputs (datasets, models, predictions, evaluation reports) are
written deterministically: the same invocation with the same seed and
flags produces byte-identical files.  Timing measurements are inherently
run-dependent and therefore go to sidecar files and the console, never
into the primary outputs.

Exit codes: 0 success, 2 invalid arguments, 3 I/O failure, 4 resource
limit exceeded.
"""

from __future__ import annotations

import argparse
import gc
import hashlib
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .compressed import compressed_decode, length_distribution
from .datagen import (DEFAULT_ATTEMPT_PROB, default_world, load_world, robot_dataset)
from .metrics import eds
from .model import (ChainModel, LabeledSequence, ObservationAlphabet, StateSpace,
                    compress, estimate_counts, load_dataset, load_model,
                    save_dataset, save_model)
from .oracle import BudgetExceededError
from .vanilla import baseline_compressed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RESOURCE = 4

DEFAULT_CMAX = 128


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def _read_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
    return records


def _dataset_spaces(data_path) -> tuple[StateSpace, ObservationAlphabet]:
    """Label spaces for a dataset: its generation sidecar, else sorted uniques."""
    meta_path = Path(str(data_path) + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        return (StateSpace(tuple(meta["state_labels"])),
                ObservationAlphabet(tuple(meta["symbols"])))
    states: set[str] = set()
    symbols: set[str] = set()
    for record in _read_jsonl(data_path):
        symbols.update(record.get("obs", []))
        states.update(record.get("states") or [])
    if not symbols:
        raise ValueError(f"dataset {data_path} contains no observations")
    if not states:
        raise ValueError(f"dataset {data_path} contains no state labels to fit against")
    return StateSpace(tuple(sorted(states))), ObservationAlphabet(tuple(sorted(symbols)))


def _parse_length_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise ValueError(f"length range must be LO:HI, got {text!r}") from None


def cmd_gen_robot(args) -> int:
    world = load_world(args.world) if args.world else default_world()
    length_range = _parse_length_range(args.length_range)
    dataset = robot_dataset(world, args.n, length_range, args.accuracy, args.seed,
                            attempt_prob=args.attempt_prob, blocked=args.blocked)
    states = world.state_space()
    alphabet = world.color_alphabet()
    save_dataset(dataset, args.out, states=states, alphabet=alphabet)
    world_text = world.to_text()
    meta = {
        "world_sha256": hashlib.sha256(world_text.encode()).hexdigest(),
        "state_labels": list(states.labels),
        "symbols": list(alphabet.symbols),
        "n_sequences": args.n,
        "length_range": list(length_range),
        "accuracy": args.accuracy,
        "seed": args.seed,
        "attempt_prob": args.attempt_prob,
        "blocked": args.blocked,
    }
    _write_json(str(args.out) + ".meta.json", meta)
    print(f"wrote {len(dataset)} sequences to {args.out}")
    return EXIT_OK


def _entropy_bits(logw_rows: np.ndarray) -> float:
    probs = np.exp(np.atleast_2d(logw_rows))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log2(probs), 0.0)
    return float(-terms.sum(axis=1).mean())


def cmd_fit(args) -> int:
    states, alphabet = _dataset_spaces(args.data)
    dataset = load_dataset(args.data, states=states, alphabet=alphabet, require_states=True)
    model = estimate_counts(dataset, args.smoothing, states=states, alphabet=alphabet)
    save_model(model, args.out)
    n_forbidden = int(np.isneginf(model.trans_logw).sum() + np.isneginf(model.emit_logw).sum()
                      + np.isneginf(model.init_logw).sum())
    print(f"fitted model: M={model.num_states} states, V={model.num_symbols} symbols")
    print(f"mean row entropy: transitions {_entropy_bits(model.trans_logw):.3f} bits, "
          f"emissions {_entropy_bits(model.emit_logw):.3f} bits")
    if n_forbidden:
        print(f"warning: {n_forbidden} unobserved events have -inf log-weight "
              f"(smoothing={args.smoothing}); inference treats them as forbidden",
              file=sys.stderr)
    return EXIT_OK


def _predict_one(model: ChainModel, seq: LabeledSequence, method: str,
                 c_max: int | None, norm: str):
    if method == "viterbi":
        pred = list(baseline_compressed(model, seq, method="joint"))
        return pred, None
    if method == "marginal":
        pred = list(baseline_compressed(model, seq, method="marginal"))
        return pred, None
    if method == "compressed":
        bound = min(len(seq), c_max if c_max is not None else DEFAULT_CMAX)
        result = compressed_decode(model, seq, c_max=bound, mode=norm)
        return result.states, result.length
    raise ValueError(f"unknown inference method {method!r}")


def cmd_infer(args) -> int:
    model = load_model(args.model)
    # Labels are dropped at load time: predictions cannot see ground truth.
    dataset = load_dataset(args.data, states=model.states, alphabet=model.alphabet,
                           drop_states=True)
    if not dataset:
        raise ValueError(f"dataset {args.data} is empty")
    records = []
    timings = []
    n_duplicates = 0
    for idx, seq in enumerate(dataset):
        t0 = time.perf_counter()
        pred, c_hat = _predict_one(model, seq, args.method, args.cmax, args.norm)
        micros = int((time.perf_counter() - t0) * 1e6)
        labels = [model.states.labels[s] for s in pred]
        has_dup = any(a == b for a, b in zip(pred, pred[1:]))
        n_duplicates += bool(has_dup)
        record = {
            "index": idx,
            "method": args.method,
            "prediction": labels,
            "adjacent_duplicates": bool(has_dup),
        }
        if c_hat is not None:
            record["c_hat"] = c_hat
        records.append(record)
        timings.append({"index": idx, "micros": micros})
    _write_jsonl(args.out, records)
    _write_jsonl(str(args.out) + ".timing.jsonl", timings)
    mean_us = statistics.mean(t["micros"] for t in timings)
    print(f"{args.method}: {len(records)} predictions -> {args.out} "
          f"(mean {mean_us:.0f} us/sequence)")
    if n_duplicates:
        print(f"diagnostics: {n_duplicates} predictions contain adjacent duplicate "
              f"states (reported verbatim)", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data, states=model.states, alphabet=model.alphabet,
                           require_states=True)
    truths = [compress(seq.states) for seq in dataset]
    by_method: dict[str, dict[int, list[int]]] = {}
    for record in _read_jsonl(args.pred):
        method = record.get("method")
        if method is None or "prediction" not in record or "index" not in record:
            raise ValueError(f"malformed prediction record in {args.pred}: {record}")
        pred = [model.states.index(lab) for lab in record["prediction"]]
        by_method.setdefault(method, {})[int(record["index"])] = pred
    if not by_method:
        raise ValueError(f"no prediction records in {args.pred}")
    report: dict = {"n_sequences": len(truths), "methods": {}}
    print(f"{'method':<12} {'exact':>8} {'eds':>8} {'n':>6}")
    for method in sorted(by_method):
        preds_map = by_method[method]
        if sorted(preds_map) != list(range(len(truths))):
            raise ValueError(
                f"method {method!r} has predictions for {len(preds_map)} of "
                f"{len(truths)} sequences"
            )
        preds = [preds_map[i] for i in range(len(truths))]
        score, detail = eds(preds, truths)
        report["methods"][method] = {
            "exact_score": detail.exact_score,
            "eds": detail.eds,
            "per_sequence": [{"edit_distance": d, "normalizer": m}
                             for d, m in detail.per_sequence],
        }
        print(f"{method:<12} {detail.exact_score:>8.2f} {score:>8.2f} {len(preds):>6}")
    _write_json(args.out, report)
    return EXIT_OK


def bench_length_distribution(model: ChainModel, obs, cmax_list, repeats: int = 5,
                              norm: str = "truncated") -> list[dict]:
    """Median wall-clock of ``length_distribution`` per height bound.

    Every height bound gets one untimed warm-up run before sampling, so
    one-off compilation and cache effects stay out of the medians.
    Samples are taken round-robin across the height bounds rather than in
    one block per bound: machine speed drifts over a run, and interleaving
    spreads any slow stretch over every bound instead of loading it onto
    whichever one was being measured at the time.  Garbage collection is
    paused while sampling, as timeit does.
    """
    sizes = [int(c_max) for c_max in cmax_list]
    samples: dict[int, list[float]] = {c_max: [] for c_max in sizes}
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for c_max in sizes:
            length_distribution(model, obs, c_max, mode=norm)  # warm-up
        for _ in range(repeats):
            for c_max in sizes:
                t0 = time.perf_counter()
                length_distribution(model, obs, c_max, mode=norm)
                samples[c_max].append(time.perf_counter() - t0)
    finally:
        if gc_was_enabled:
            gc.enable()
    rows = []
    for c_max in sizes:
        median = statistics.median(samples[c_max])
        rows.append({"c_max": c_max, "median_seconds": median,
                     "seconds_per_unit_height": median / c_max})
    return rows


def cmd_bench(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data, states=model.states, alphabet=model.alphabet,
                           drop_states=True)
    if not dataset:
        raise ValueError(f"dataset {args.data} is empty")
    try:
        cmax_list = [int(v) for v in args.cmax_list.split(",") if v]
    except ValueError:
        raise ValueError(f"--cmax-list must be comma-separated ints, got {args.cmax_list!r}") from None
    if not cmax_list:
        raise ValueError("--cmax-list is empty")
    obs = dataset[0]
    t_len = len(obs)
    for c_max in cmax_list:
        if not 1 <= c_max <= t_len:
            raise ValueError(f"c_max {c_max} outside 1..{t_len} for the timed sequence")
    rows = bench_length_distribution(model, obs, cmax_list, repeats=args.repeats,
                                     norm=args.norm)
    print(f"T={t_len}, M={model.num_states}, norm={args.norm}, "
          f"median of {args.repeats}")
    print(f"{'c_max':>6} {'median_ms':>12} {'ms_per_height':>14}")
    for row in rows:
        print(f"{row['c_max']:>6} {row['median_seconds'] * 1e3:>12.3f} "
              f"{row['seconds_per_unit_height'] * 1e3:>14.4f}")
    if args.out:
        _write_json(args.out, {"rows": rows, "T": t_len, "M": model.num_states,
                               "norm": args.norm})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compseq",
        description="Collapsed-state-sequence inference for chain models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-robot", help="simulate robot walks into a labeled dataset")
    p.add_argument("--world", default=None, help="world map file (default: shipped world)")
    p.add_argument("--n", type=int, required=True, help="number of sequences")
    p.add_argument("--length-range", default="100:300", help="sequence length bounds LO:HI")
    p.add_argument("--accuracy", type=float, default=100.0,
                   help="sensor accuracy percent (default 100)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--attempt-prob", type=float, default=DEFAULT_ATTEMPT_PROB,
                   help=f"per-step move-attempt probability (default {DEFAULT_ATTEMPT_PROB})")
    p.add_argument("--blocked", choices=["stay", "resample"], default="stay",
                   help="blocked attempts burn the step (stay) or re-draw (resample)")
    p.add_argument("--out", required=True, help="output dataset path (JSON Lines)")
    p.set_defaults(func=cmd_gen_robot)

    p = sub.add_parser("fit", help="fit a chain model by smoothed counting")
    p.add_argument("--data", required=True, help="labeled dataset (JSON Lines)")
    p.add_argument("--smoothing", type=float, default=1.0,
                   help="additive pseudo-count (default 1.0)")
    p.add_argument("--out", required=True, help="output model path (JSON)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="predict collapsed sequences")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["viterbi", "marginal", "compressed"],
                   required=True)
    p.add_argument("--cmax", type=int, default=None,
                   help=f"height bound for the compressed method "
                        f"(default min(T, {DEFAULT_CMAX}))")
    p.add_argument("--norm", choices=["exact", "truncated"], default="exact",
                   help="length-posterior normalization (default exact)")
    p.add_argument("--out", required=True, help="output predictions path (JSON Lines)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="score predictions against labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="labeled dataset (JSON Lines)")
    p.add_argument("--pred", required=True, help="predictions file from 'infer'")
    p.add_argument("--out", required=True, help="output report path (JSON)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time the length posterior per height bound")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--cmax-list", default="8,16,32,64")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--norm", choices=["exact", "truncated"], default="truncated",
                   help="normalization mode to time (default truncated: its cost "
                        "scales with the height bound)")
    p.add_argument("--out", default=None, help="optional JSON timing report")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
