from __future__ import annotations

import csv
import io
import random

import pytest

from chainwatch.errors import InsufficientData, TooFewSessions
from chainwatch.evaluation import (
    evaluate,
    run_evaluation,
    scaling_experiment,
    split_dataset,
    top_sequences,
)
from chainwatch.session_store import Corpus
from chainwatch.synth import default_mirai_like_spec, generate
from conftest import T0, make_corpus, make_session

# Shell strings echoing the most common bot command windows, with their
# observed frequencies; ranking is by frequency, so order here is scrambled.
BOT_WINDOWS = [
    (["shell", "system", "enable", "/var/run/.ptmx", "/etc/.ptmx", "cp"], 654),
    (["/usr/.ptmx", "/boot/.ptmx", "while", "cp", "chmod", "cat'"], 653),
    (["%{input[0]}", "/var/.ptmx", "shell", "system", "enable", "/var/run/.ptmx"], 656),
    (["/dev/.ptmx", "/dev/shm/.ptmx", "rm", "while", "%{input[0]}", "/bin/.ptmx"], 662),
    (["/var/tmp/.ptmx", "/boot/.ptmx", "chmod", "/tmp/.ptmx", ">/.ptmx", "/usr/.ptmx"], 649),
]


def bot_corpus() -> Corpus:
    sessions = []
    n = 0
    for cmds, freq in BOT_WINDOWS:
        for _ in range(freq):
            sessions.append(make_session(f"s{n:05d}", cmds))
            n += 1
    return Corpus(sessions=sessions, created_at=T0, source="bot windows")


# ------------------------------------------------------------------ split


def test_split_80_20_of_ten():
    corpus = make_corpus(*[["a", "b", "c"]] * 10)
    train, test = split_dataset(corpus, 0.8, seed=42)
    assert len(train.sessions) == 8 and len(test.sessions) == 2
    train_keys = {s.key for s in train.sessions}
    test_keys = {s.key for s in test.sessions}
    assert not train_keys & test_keys
    assert train_keys | test_keys == {s.key for s in corpus.sessions}


def test_split_deterministic():
    corpus = make_corpus(*[["a", "b"]] * 12)
    first = split_dataset(corpus, 0.8, seed=7)
    second = split_dataset(corpus, 0.8, seed=7)
    assert [s.key for s in first[0].sessions] == [s.key for s in second[0].sessions]
    assert [s.key for s in first[1].sessions] == [s.key for s in second[1].sessions]


def test_split_rounding_five_sessions():
    corpus = make_corpus(*[["a", "b"]] * 5)
    train, test = split_dataset(corpus, 0.8, seed=0)
    assert len(train.sessions) == 4 and len(test.sessions) == 1


def test_split_too_few_sessions():
    with pytest.raises(TooFewSessions):
        split_dataset(make_corpus(["a", "b"]), 0.8, seed=0)


def test_split_ratio_bounds():
    corpus = make_corpus(["a"], ["b"])
    for ratio in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            split_dataset(corpus, ratio, seed=0)


def test_split_soundness_random():
    rng = random.Random(9)
    for _ in range(25):
        n = rng.randint(2, 40)
        corpus = make_corpus(*[["a", "b"] for _ in range(n)])
        ratio = rng.uniform(0.1, 0.9)
        train, test = split_dataset(corpus, ratio, seed=rng.randint(0, 999))
        assert len(train.sessions) + len(test.sessions) == n
        keys = [s.key for s in train.sessions] + [s.key for s in test.sessions]
        assert sorted(keys) == sorted(s.key for s in corpus.sessions)


# --------------------------------------------------------------- evaluate


def test_evaluate_exact_training_windows_score_one():
    cmds = ["shell", "system", "enable", "cp", "rm", "cat"]
    train_corpus = make_corpus(*[cmds] * 4)
    test_corpus = Corpus(sessions=[make_session("t0", cmds)], created_at=T0)
    report = evaluate(train_corpus, test_corpus, (3, 6), repeats=1)
    for row in report.per_k.values():
        assert row.accuracy == 1.0
        assert row.n_test > 0


def test_evaluate_noise_free_synthetic_is_perfect(clean_corpus):
    report = run_evaluation(clean_corpus, seed=0, k_range=(3, 6), repeats=1)
    for k, row in report.per_k.items():
        assert row.accuracy == 1.0, f"k={k}"


def test_evaluate_zero_test_windows_reports_null():
    train_corpus = make_corpus(["a", "b", "c", "d", "e", "f"])
    test_corpus = Corpus(sessions=[make_session("t", ["a", "b", "c"])], created_at=T0)
    report = evaluate(train_corpus, test_corpus, (5, 5), repeats=1)
    row = report.per_k[5]
    assert row.accuracy is None
    assert row.n_test == 0
    assert row.n_train == 2


def test_evaluate_requires_non_empty_corpora():
    corpus = make_corpus(["a", "b", "c"])
    empty = Corpus(sessions=[], created_at=T0)
    with pytest.raises(ValueError):
        evaluate(corpus, empty, (3, 3))
    with pytest.raises(ValueError):
        evaluate(empty, corpus, (3, 3))


def test_evaluate_accuracy_matches_prediction_log(noisy_corpus):
    report = run_evaluation(
        noisy_corpus, seed=1, k_range=(3, 5), repeats=1, record_predictions=True
    )
    for k, row in report.per_k.items():
        log = report.predictions[k]
        assert len(log) == row.n_test
        recomputed = sum(1 for _, label, predicted in log if label == predicted)
        assert row.accuracy == recomputed / row.n_test


def test_evaluate_jobs_do_not_change_results(noisy_corpus):
    serial = run_evaluation(noisy_corpus, seed=2, k_range=(3, 6), jobs=1, repeats=1)
    threaded = run_evaluation(noisy_corpus, seed=2, k_range=(3, 6), jobs=8, repeats=1)
    for k in serial.per_k:
        assert serial.per_k[k].accuracy == threaded.per_k[k].accuracy
        assert serial.per_k[k].n_test == threaded.per_k[k].n_test


def test_evaluate_sample_limit_windows(noisy_corpus):
    report = run_evaluation(
        noisy_corpus, seed=0, k_range=(3, 4), repeats=1, sample_limit=100
    )
    for row in report.per_k.values():
        assert row.n_test == 100


def test_evaluate_sample_limit_sessions(noisy_corpus):
    report = run_evaluation(
        noisy_corpus,
        seed=0,
        k_range=(3, 3),
        repeats=1,
        sample_limit=10,
        sample_unit="sessions",
    )
    assert report.test_sessions == 10


def test_monotone_information_on_synthetic_data():
    corpus = generate(default_mirai_like_spec(seed=0, n_sessions=800))
    report = run_evaluation(corpus, seed=0, k_range=(3, 5), repeats=1)
    assert report.per_k[5].accuracy >= report.per_k[3].accuracy - 0.02


def test_unknown_test_commands_never_count_as_correct():
    train_corpus = make_corpus(*[["a", "b", "c", "d"]] * 3)
    test_corpus = Corpus(
        sessions=[make_session("t", ["a", "b", "c", "mystery"])], created_at=T0
    )
    report = evaluate(train_corpus, test_corpus, (4, 4), repeats=1)
    assert report.per_k[4].accuracy == 0.0


# ------------------------------------------------------------------ report


def test_report_csv_shape(clean_corpus):
    report = run_evaluation(clean_corpus, seed=0, repeats=1)
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["k", "accuracy_pct", "train_time_s", "test_time_s", "n_train", "n_test", "seed"]
    assert len(rows) == 1 + 9
    assert [r[0] for r in rows[1:]] == [str(k) for k in range(3, 12)]
    assert rows[1][1] == "100.00"


def test_report_json_shape(clean_corpus):
    report = run_evaluation(clean_corpus, seed=4, k_range=(3, 4), repeats=1)
    doc = report.to_json_dict()
    assert doc["split_seed"] == 4
    assert doc["split_ratio"] == 0.8
    assert len(doc["corpus_fingerprint"]) == 64
    assert set(doc["per_k"]) == {"3", "4"}
    assert {"accuracy", "n_train", "n_test", "train_time_s", "test_time_s"} <= set(
        doc["per_k"]["3"]
    )


# ----------------------------------------------------------- top sequences


def test_top_sequences_orders_by_frequency():
    got = top_sequences(bot_corpus(), k=6, n=5)
    expected_order = sorted(BOT_WINDOWS, key=lambda wf: -wf[1])
    assert [(list(seq), freq) for seq, freq in got] == expected_order
    assert [freq for _, freq in got] == [662, 656, 654, 653, 649]
    assert got[2][1] == 654  # third most frequent window


def test_top_sequences_single_session():
    corpus = make_corpus(["a", "b", "c"])
    assert top_sequences(corpus, 3, 5) == [(("a", "b", "c"), 1)]


def test_top_sequences_n_larger_than_distinct():
    corpus = make_corpus(["a", "b", "c", "d"])
    got = top_sequences(corpus, 2, 99)
    assert len(got) == 3


def test_top_sequences_tie_is_lexicographic():
    corpus = make_corpus(["b", "z"], ["a", "z"])
    assert top_sequences(corpus, 2, 2) == [(("a", "z"), 1), (("b", "z"), 1)]


def test_top_sequences_counts_sliding_windows():
    corpus = make_corpus(["a", "a", "a", "a"])
    assert top_sequences(corpus, 2, 1) == [(("a", "a"), 3)]


# ---------------------------------------------------------------- scaling


def test_scaling_rows_echo_sizes(clean_corpus):
    rows = scaling_experiment(clean_corpus, [50, 100], k=4, seed=0, repeats=1)
    assert [r[0] for r in rows] == [50, 100]
    for _, train_time, test_time in rows:
        assert train_time > 0 and test_time > 0


def test_scaling_zero_size_rejected(clean_corpus):
    with pytest.raises(InsufficientData):
        scaling_experiment(clean_corpus, [0, 10], k=4, seed=0)
    with pytest.raises(InsufficientData):
        scaling_experiment(clean_corpus, [], k=4, seed=0)


def test_scaling_size_beyond_pool_rejected(clean_corpus):
    with pytest.raises(InsufficientData):
        scaling_experiment(clean_corpus, [10 ** 9], k=4, seed=0)


def test_scaling_sizes_must_ascend(clean_corpus):
    with pytest.raises(ValueError):
        scaling_experiment(clean_corpus, [100, 50], k=4, seed=0)
