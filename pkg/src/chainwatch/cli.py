"""Command-line entry point: ingest -> corpus -> train -> predict/eval/top/gen.

One binary with subcommands; a JSON config file (via --config or the
CHAINWATCH_CONFIG environment variable) supplies defaults that flags
override. Exit codes are stable for scripting: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .chains import DEFAULT_K_MAX, DEFAULT_K_MIN, Vocabulary, build_chain, split_subchains
from .errors import ChainwatchError, NoModelForLength
from .evaluation import run_evaluation, top_sequences
from .ingest import ParseStats, filter_command_events, read_events, report_error
from .predictor import load_model, save_model, train
from .session_store import group_sessions, load_corpus, save_corpus
from .synth import default_mirai_like_spec, generate, load_spec

CONFIG_ENV = "CHAINWATCH_CONFIG"


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ChainwatchError(f"{path}: config must be a JSON object")
    return cfg


def _resolve(value, cfg: dict, key: str, default=None):
    if value is not None:
        return value
    return cfg.get(key, default)


def _require(value, cfg: dict, key: str, parser: argparse.ArgumentParser, flag: str):
    resolved = _resolve(value, cfg, key)
    if resolved is None:
        parser.error(f"{flag} is required (flag or config key '{key}')")
    return resolved


def _k_range(args, cfg, parser) -> tuple[int, int]:
    k_min = int(_resolve(args.k_min, cfg, "k_min", DEFAULT_K_MIN))
    k_max = int(_resolve(args.k_max, cfg, "k_max", DEFAULT_K_MAX))
    if not 2 <= k_min <= k_max:
        parser.error(f"need 2 <= k-min <= k-max, got {k_min}..{k_max}")
    return k_min, k_max


def cmd_ingest(args, cfg, parser) -> int:
    out = _require(args.out, cfg, "out", parser, "--out")
    stats = ParseStats()
    events = read_events(args.logs, stats=stats, on_error=report_error)
    commands = list(filter_command_events(events))
    corpus = group_sessions(commands, source=",".join(str(p) for p in args.logs))
    save_corpus(corpus, out)
    print(f"{len(commands)} events, {len(corpus.sessions)} sessions, {stats.errors} errors")
    return 0 if commands else 1


def cmd_train(args, cfg, parser) -> int:
    corpus_path = _require(args.corpus, cfg, "corpus", parser, "--corpus")
    out = _require(args.out, cfg, "out", parser, "--out")
    k_min, k_max = _k_range(args, cfg, parser)
    corpus = load_corpus(corpus_path)
    vocab = Vocabulary()
    chains = [build_chain(s, vocab) for s in corpus.sessions]
    windows = []
    for k in range(k_min, k_max + 1):
        k_windows = [sc for ch in chains for sc in split_subchains(ch, k)]
        print(f"k={k}: {len(k_windows)} windows")
        windows.extend(k_windows)
    model = train(windows, vocab)
    save_model(model, out)
    print(f"model written to {out} ({len(vocab)} commands)")
    return 0


def cmd_predict(args, cfg, parser) -> int:
    model_path = _require(args.model, cfg, "model", parser, "--model")
    model = load_model(model_path)
    commands = args.commands.split(",")
    k = len(commands) + 1
    vocab = model.vocab.copy()
    query = [vocab.encode(c) for c in commands]
    try:
        pred = model.predict_next(k, query)
    except NoModelForLength:
        lengths = model.lengths()
        raise NoModelForLength(
            f"model covers window lengths {lengths[0]}..{lengths[-1]}; "
            f"pass between {lengths[0] - 1} and {lengths[-1] - 1} commands, got {len(commands)}"
        ) from None
    print(
        json.dumps(
            {
                "predicted_command": pred.predicted_command,
                "matched_prefix": [model.vocab.command_of(t) for t in pred.matched_prefix],
                "distance": pred.distance,
                "frequency": pred.match_frequency,
                "distance_ties": pred.distance_ties,
                "exact": pred.exact,
            }
        )
    )
    return 0


def cmd_eval(args, cfg, parser) -> int:
    corpus_path = _require(args.corpus, cfg, "corpus", parser, "--corpus")
    k_min, k_max = _k_range(args, cfg, parser)
    ratio = float(_resolve(args.ratio, cfg, "ratio", 0.8))
    if not 0.0 < ratio < 1.0:
        parser.error(f"--ratio must lie strictly between 0 and 1, got {ratio}")
    seed = int(_resolve(args.seed, cfg, "seed", 0))
    jobs = int(_resolve(args.jobs, cfg, "jobs", 1))
    sample_limit = _resolve(args.sample_limit, cfg, "sample_limit")
    sample_limit = int(sample_limit) if sample_limit is not None else None
    sample_unit = _resolve(args.sample_unit, cfg, "sample_unit", "windows")
    report_path = _resolve(args.report, cfg, "report")

    corpus = load_corpus(corpus_path)
    report = run_evaluation(
        corpus,
        ratio=ratio,
        seed=seed,
        k_range=(k_min, k_max),
        jobs=jobs,
        sample_limit=sample_limit,
        sample_unit=sample_unit,
    )
    print(f"{'k':>3}  {'accuracy%':>9}  {'train_s':>8}  {'test_s':>8}  {'n_train':>8}  {'n_test':>8}")
    for k, row in sorted(report.per_k.items()):
        acc = "-" if row.accuracy is None else f"{100.0 * row.accuracy:.2f}"
        print(
            f"{k:>3}  {acc:>9}  {row.train_time:>8.3f}  {row.test_time:>8.3f}"
            f"  {row.n_train:>8}  {row.n_test:>8}"
        )
    if report_path:
        text = report.to_csv() if str(report_path).endswith(".csv") else report.to_json()
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"report written to {report_path}")
    return 0


def cmd_top(args, cfg, parser) -> int:
    corpus_path = _require(args.corpus, cfg, "corpus", parser, "--corpus")
    corpus = load_corpus(corpus_path)
    for seq, freq in top_sequences(corpus, args.length, args.count):
        print(f"{freq}\t{' - '.join(seq)}")
    return 0


def cmd_gen(args, cfg, parser) -> int:
    out = _require(args.out, cfg, "out", parser, "--out")
    seed = _resolve(args.seed, cfg, "seed")
    if args.default:
        spec = default_mirai_like_spec(seed=int(seed) if seed is not None else 0)
    elif args.spec:
        spec = load_spec(args.spec)
        if seed is not None:
            spec = replace(spec, seed=int(seed))
    else:
        parser.error("pass --spec FILE or --default")
    corpus = generate(spec)
    save_corpus(corpus, out)
    print(f"{len(corpus.sessions)} sessions, {corpus.event_count()} events -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainwatch",
        description="Reconstruct attacker command chains from Cowrie logs and "
        "predict the next shell command.",
    )
    parser.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse Cowrie logs into a session corpus")
    p.add_argument("logs", nargs="+", help="Cowrie JSON log files (gzip ok, '-' for stdin)")
    p.add_argument("--out", help="corpus file to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the sub-chain frequency model")
    p.add_argument("--corpus")
    p.add_argument("--out", help="model file to write")
    p.add_argument("--k-min", type=int, dest="k_min")
    p.add_argument("--k-max", type=int, dest="k_max")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict the next command for a context")
    p.add_argument("--model")
    p.add_argument("--commands", required=True, help='comma-separated context, e.g. "shell,system,enable"')
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="80/20 split evaluation with timing")
    p.add_argument("--corpus")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--k-min", type=int, dest="k_min")
    p.add_argument("--k-max", type=int, dest="k_max")
    p.add_argument("--sample-limit", type=int, dest="sample_limit")
    p.add_argument("--sample-unit", choices=["windows", "sessions"], dest="sample_unit")
    p.add_argument("--jobs", type=int)
    p.add_argument("--report", help="write report to this .json or .csv file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("top", help="most frequent command sequences")
    p.add_argument("--corpus")
    p.add_argument("-k", type=int, default=6, dest="length", help="sequence length")
    p.add_argument("-n", type=int, default=5, dest="count", help="how many to show")
    p.set_defaults(func=cmd_top)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--spec", help="generator spec JSON file")
    p.add_argument("--default", action="store_true", help="use the built-in Mirai-like spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="corpus file to write")
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, _load_config(args.config), parser)
    except SystemExit as exc:
        return 2 if exc.code is None else int(exc.code)
    except ChainwatchError as exc:
        print(f"chainwatch: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"chainwatch: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
