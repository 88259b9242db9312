"""Train/test protocol: session split, per-length accuracy, timing.

The split unit is the whole session so near-duplicate windows from one
login never leak across the split. For each window length the harness
trains a frequency model on the training windows, predicts every test
window from its prefix, and records accuracy plus wall-clock train and
test times (best of N repeats, millisecond resolution).
"""

from __future__ import annotations

import csv
import gc
import io
import json
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .chains import (
    DEFAULT_K_MAX,
    DEFAULT_K_MIN,
    SubChain,
    Vocabulary,
    build_chain,
    normalize_command,
    split_subchains,
)
from .errors import InsufficientData, TooFewSessions
from .predictor import FrequencyModel, train
from .session_store import Corpus

SAMPLE_UNITS = ("windows", "sessions")


@dataclass
class LengthReport:
    """Accuracy and timing for one window length (one table row)."""

    k: int
    accuracy: float | None
    n_train: int
    n_test: int
    train_time: float
    test_time: float


@dataclass
class EvalReport:
    """Per-length results plus everything needed to reproduce the run."""

    per_k: dict[int, LengthReport]
    split_seed: int
    split_ratio: float
    corpus_fingerprint: str
    train_sessions: int
    test_sessions: int
    predictions: dict[int, list[tuple[tuple[int, ...], int, int]]] | None = None

    def to_json_dict(self) -> dict:
        return {
            "split_seed": self.split_seed,
            "split_ratio": self.split_ratio,
            "corpus_fingerprint": self.corpus_fingerprint,
            "train_sessions": self.train_sessions,
            "test_sessions": self.test_sessions,
            "per_k": {
                str(k): {
                    "accuracy": row.accuracy,
                    "n_train": row.n_train,
                    "n_test": row.n_test,
                    "train_time_s": round(row.train_time, 3),
                    "test_time_s": round(row.test_time, 3),
                }
                for k, row in sorted(self.per_k.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        """Columns mirroring the per-length accuracy/time table."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["k", "accuracy_pct", "train_time_s", "test_time_s", "n_train", "n_test", "seed"]
        )
        for k, row in sorted(self.per_k.items()):
            acc = "" if row.accuracy is None else f"{100.0 * row.accuracy:.2f}"
            writer.writerow(
                [
                    k,
                    acc,
                    f"{row.train_time:.3f}",
                    f"{row.test_time:.3f}",
                    row.n_train,
                    row.n_test,
                    self.split_seed,
                ]
            )
        return buf.getvalue()


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def split_dataset(corpus: Corpus, ratio: float, seed: int) -> tuple[Corpus, Corpus]:
    """Split by whole session: round(ratio * n) sessions train, rest test.

    Deterministic for a given seed; both sides keep the corpus's original
    session order.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must lie strictly between 0 and 1")
    n = len(corpus.sessions)
    if n < 2:
        raise TooFewSessions(f"cannot split {n} session(s)")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_train = _round_half_up(ratio * n)
    train_idx = sorted(order[:n_train])
    test_idx = sorted(order[n_train:])
    return (
        Corpus(
            sessions=[corpus.sessions[i] for i in train_idx],
            created_at=corpus.created_at,
            source=f"{corpus.source} [train]",
        ),
        Corpus(
            sessions=[corpus.sessions[i] for i in test_idx],
            created_at=corpus.created_at,
            source=f"{corpus.source} [test]",
        ),
    )


_MIN_TIMED_BATCH = 0.025  # seconds; sub-ms phases are timed in batches


def _best_of(fn: Callable[[], object], repeats: int) -> tuple[float, object]:
    """Run fn `repeats` times; return (fastest wall-clock seconds, last result).

    Measurement hygiene as in timeit: one untimed warmup run, collector
    paused while timing, and very fast phases executed in a calibrated
    batch per run (elapsed divided by the batch size) so the reading
    reflects the work rather than scheduler granularity.
    """
    t0 = time.perf_counter()
    result = fn()
    warmup = time.perf_counter() - t0
    number = 1
    if warmup < _MIN_TIMED_BATCH:
        number = min(50, math.ceil(_MIN_TIMED_BATCH / max(warmup, 1e-7)))
    best = math.inf
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            for _ in range(number):
                result = fn()
            best = min(best, (time.perf_counter() - t0) / number)
    finally:
        if gc_was_enabled:
            gc.enable()
    return best, result


def _predict_all(
    model: FrequencyModel, k: int, windows: Sequence[SubChain], jobs: int
) -> list[int]:
    """Predicted token per window, order-preserving for any jobs count."""
    if jobs <= 1 or len(windows) < 2 * jobs:
        return [model.predict_next(k, w.prefix).predicted for w in windows]
    chunk = max(1, math.ceil(len(windows) / (jobs * 4)))
    batches = [windows[i : i + chunk] for i in range(0, len(windows), chunk)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = pool.map(
            lambda batch: [model.predict_next(k, w.prefix).predicted for w in batch],
            batches,
        )
        return [tok for batch in results for tok in batch]


def _subsample(items: list, limit: int | None, seed: int) -> list:
    """Deterministic subsample keeping the original order."""
    if limit is None or len(items) <= limit:
        return items
    idx = sorted(random.Random(seed).sample(range(len(items)), limit))
    return [items[i] for i in idx]


def evaluate(
    train_corpus: Corpus,
    test_corpus: Corpus,
    k_range: tuple[int, int] = (DEFAULT_K_MIN, DEFAULT_K_MAX),
    *,
    split_seed: int = 0,
    split_ratio: float = 0.8,
    jobs: int = 1,
    repeats: int = 3,
    sample_limit: int | None = None,
    sample_unit: str = "windows",
    record_predictions: bool = False,
) -> EvalReport:
    """Train on the training corpus and score every test window per length.

    The vocabulary is built from the training split only; unseen test
    commands get fresh tokens that can never match a stored prefix token.
    ``sample_limit`` caps the test side, counted in windows (per length)
    or whole sessions depending on ``sample_unit``. Timing uses the best
    of ``repeats`` runs; results are identical for any ``jobs`` count.
    """
    if not train_corpus.sessions or not test_corpus.sessions:
        raise ValueError("both corpora must be non-empty")
    if sample_unit not in SAMPLE_UNITS:
        raise ValueError(f"sample_unit must be one of {SAMPLE_UNITS}")
    k_min, k_max = k_range
    if not 2 <= k_min <= k_max:
        raise ValueError("need 2 <= k_min <= k_max")

    fingerprint = Corpus(
        sessions=list(train_corpus.sessions) + list(test_corpus.sessions),
        created_at=train_corpus.created_at,
    ).fingerprint()

    vocab = Vocabulary()
    train_chains = [build_chain(s, vocab) for s in train_corpus.sessions]

    test_sessions = test_corpus.sessions
    if sample_unit == "sessions":
        test_sessions = _subsample(list(test_sessions), sample_limit, split_seed)
    test_vocab = vocab.copy()
    test_chains = [build_chain(s, test_vocab) for s in test_sessions]

    per_k: dict[int, LengthReport] = {}
    logs: dict[int, list[tuple[tuple[int, ...], int, int]]] = {}
    for k in range(k_min, k_max + 1):
        train_windows = [sc for ch in train_chains for sc in split_subchains(ch, k)]
        test_windows = [sc for ch in test_chains for sc in split_subchains(ch, k)]
        if sample_unit == "windows":
            test_windows = _subsample(test_windows, sample_limit, split_seed * 1000003 + k)

        if not train_windows or not test_windows:
            per_k[k] = LengthReport(
                k=k,
                accuracy=None,
                n_train=len(train_windows),
                n_test=len(test_windows),
                train_time=0.0,
                test_time=0.0,
            )
            continue

        train_time, model = _best_of(lambda: train(train_windows, vocab), repeats)
        test_time, predicted = _best_of(
            lambda: _predict_all(model, k, test_windows, jobs), repeats
        )
        correct = sum(
            1 for w, p in zip(test_windows, predicted) if p == w.label
        )
        per_k[k] = LengthReport(
            k=k,
            accuracy=correct / len(test_windows),
            n_train=len(train_windows),
            n_test=len(test_windows),
            train_time=train_time,
            test_time=test_time,
        )
        if record_predictions:
            logs[k] = [
                (w.prefix, w.label, p) for w, p in zip(test_windows, predicted)
            ]

    return EvalReport(
        per_k=per_k,
        split_seed=split_seed,
        split_ratio=split_ratio,
        corpus_fingerprint=fingerprint,
        train_sessions=len(train_corpus.sessions),
        test_sessions=len(test_sessions),
        predictions=logs if record_predictions else None,
    )


def run_evaluation(
    corpus: Corpus,
    *,
    ratio: float = 0.8,
    seed: int = 0,
    k_range: tuple[int, int] = (DEFAULT_K_MIN, DEFAULT_K_MAX),
    jobs: int = 1,
    repeats: int = 3,
    sample_limit: int | None = None,
    sample_unit: str = "windows",
    record_predictions: bool = False,
) -> EvalReport:
    """Split the corpus and evaluate it in one step."""
    train_corpus, test_corpus = split_dataset(corpus, ratio, seed)
    return evaluate(
        train_corpus,
        test_corpus,
        k_range,
        split_seed=seed,
        split_ratio=ratio,
        jobs=jobs,
        repeats=repeats,
        sample_limit=sample_limit,
        sample_unit=sample_unit,
        record_predictions=record_predictions,
    )


def top_sequences(
    corpus: Corpus, k: int, n: int
) -> list[tuple[tuple[str, ...], int]]:
    """The n most frequent length-k command windows in the corpus.

    Full windows (no prefix/label split), descending frequency, ties in
    lexicographic order.
    """
    if k < 1:
        raise ValueError("window length must be at least 1")
    counts: dict[tuple[str, ...], int] = {}
    for sess in corpus.sessions:
        cmds = tuple(normalize_command(c) for c in sess.commands)
        for i in range(len(cmds) - k + 1):
            window = cmds[i : i + k]
            counts[window] = counts.get(window, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def scaling_experiment(
    corpus: Corpus,
    sizes: Sequence[int],
    k: int,
    seed: int,
    repeats: int = 3,
) -> list[tuple[int, float, float]]:
    """Wall-clock train/test times at increasing window counts.

    For each size s the experiment trains on s deterministically sampled
    windows and times s predictions (queries drawn from the same shuffled
    pool, offset by s and wrapping). Runs with parallelism 1 so timings
    are comparable; returns (size, train_time, test_time) rows.
    """
    if not sizes:
        raise InsufficientData("no sizes requested")
    if any(s < 1 for s in sizes):
        raise InsufficientData("sizes must be positive")
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    vocab = Vocabulary()
    pool = [
        sc
        for sess in corpus.sessions
        for sc in split_subchains(build_chain(sess, vocab), k)
    ]
    if max(sizes) > len(pool):
        raise InsufficientData(
            f"largest size {max(sizes)} exceeds the {len(pool)} available windows"
        )
    order = list(range(len(pool)))
    random.Random(seed).shuffle(order)
    shuffled = [pool[i] for i in order]

    rows = []
    for s in sizes:
        train_windows = shuffled[:s]
        test_windows = [shuffled[(s + i) % len(shuffled)] for i in range(s)]
        train_time, model = _best_of(lambda: train(train_windows, vocab), repeats)
        test_time, _ = _best_of(
            lambda: _predict_all(model, k, test_windows, jobs=1), repeats
        )
        rows.append((s, train_time, test_time))
    return rows
