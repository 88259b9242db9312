"""Sub-chain frequency model and nearest-prefix next-command prediction.

Training counts every (prefix, label) window in a nested map: window
length -> prefix -> label -> count. Prediction looks the query prefix up
directly; on a miss it scans all stored prefixes of that length for the
least normalized Levenshtein distance, breaking distance ties by highest
prefix frequency and remaining ties by lexicographic token order, then
returns the most frequent label under the matched prefix.

The scan is linear over stored prefixes. Distances for the scan are
computed with a numpy-batched DP (all stored prefixes of one length share
their shape); the pairwise ``levenshtein`` below is the reference form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chains import SubChain, Vocabulary
from .errors import (
    EmptyPrefixTable,
    EmptyTrainingSet,
    FormatVersionMismatch,
    NoModelForLength,
)

MODEL_FORMAT = "chainwatch-model"
MODEL_VERSION = 1

PrefixTable = dict[tuple[int, ...], dict[int, int]]


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Minimum number of single-token insertions, deletions, substitutions.

    Two-row dynamic program; symmetric; 0 iff the sequences are equal.
    """
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[len(b)]


def normalized_levenshtein(a: Sequence[int], b: Sequence[int]) -> float:
    """Levenshtein distance divided by the total length of both sequences.

    Defined as 0 when both are empty; always within [0, 1].
    """
    total = len(a) + len(b)
    if total == 0:
        return 0.0
    return levenshtein(a, b) / total


@dataclass(frozen=True)
class Prediction:
    """Outcome of one next-command lookup.

    ``match_frequency`` is how often the matched prefix followed by the
    predicted command was seen in training; ``distance_ties`` counts the
    stored prefixes at the minimal distance.
    """

    predicted: int
    predicted_command: str
    matched_prefix: tuple[int, ...]
    distance: float
    match_frequency: int
    distance_ties: int
    exact: bool


class _ScanIndex:
    """Stored prefixes of one window length, shaped for the batched scan.

    Prefixes are kept in lexicographic order so the first candidate after
    the distance/frequency tie-breaks is the lexicographically smallest.
    """

    def __init__(self, table: PrefixTable):
        self.prefixes = sorted(table)
        self.matrix = np.asarray(self.prefixes, dtype=np.int64)
        self.totals = np.asarray(
            [sum(table[p].values()) for p in self.prefixes], dtype=np.int64
        )

    def distances(self, query: tuple[int, ...]) -> np.ndarray:
        """Levenshtein distance from the query to every stored prefix."""
        n, width = self.matrix.shape
        prev = np.tile(np.arange(width + 1, dtype=np.int64), (n, 1))
        cur = np.empty_like(prev)
        for i, q in enumerate(query, start=1):
            cur[:, 0] = i
            mismatch = self.matrix != q
            for j in range(1, width + 1):
                np.minimum(prev[:, j] + 1, cur[:, j - 1] + 1, out=cur[:, j])
                np.minimum(cur[:, j], prev[:, j - 1] + mismatch[:, j - 1], out=cur[:, j])
            prev, cur = cur, prev
        return prev[:, width]


class FrequencyModel:
    """Nested per-length frequency tables over training sub-chains.

    Immutable once built; predictions are pure and safe to run from any
    number of threads.
    """

    def __init__(self, per_k: dict[int, PrefixTable], vocab: Vocabulary):
        self.per_k = per_k
        self.vocab = vocab
        self.trained_on = {
            k: sum(sum(labels.values()) for labels in table.values())
            for k, table in per_k.items()
        }
        self._indexes: dict[int, _ScanIndex] = {}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FrequencyModel)
            and self.per_k == other.per_k
            and self.vocab == other.vocab
        )

    def lengths(self) -> list[int]:
        return sorted(self.per_k)

    def _table(self, k: int) -> PrefixTable:
        try:
            return self.per_k[k]
        except KeyError:
            raise NoModelForLength(f"no prefix table for window length {k}") from None

    def _index(self, k: int) -> _ScanIndex:
        idx = self._indexes.get(k)
        if idx is None:
            idx = self._indexes[k] = _ScanIndex(self._table(k))
        return idx

    def match_prefix(
        self, k: int, query: Sequence[int], force_scan: bool = False
    ) -> tuple[tuple[int, ...], float, int]:
        """Stored prefix nearest to the query, per the documented tie-breaks.

        Returns (matched prefix, normalized distance, count of prefixes at
        the minimal distance). An exact hit short-circuits via hash lookup
        unless ``force_scan`` demands the full linear scan.
        """
        table = self._table(k)
        if not table:
            raise EmptyPrefixTable(f"prefix table for length {k} is empty")
        query = tuple(query)
        denom = len(query) + (k - 1)
        if not force_scan and query in table:
            return query, 0.0, 1

        idx = self._index(k)
        dists = idx.distances(query)
        dmin = int(dists.min())
        candidates = np.flatnonzero(dists == dmin)
        ties = int(candidates.size)
        best_total = idx.totals[candidates].max()
        winners = candidates[idx.totals[candidates] == best_total]
        matched = idx.prefixes[int(winners[0])]
        return matched, dmin / denom, ties

    def predict_next(self, k: int, query: Sequence[int]) -> Prediction:
        """Predict the next command after a k-1 token context.

        Longer queries are truncated to their most recent k-1 tokens;
        shorter ones are rejected. Label-count ties go to the smallest
        token id so predictions are total and deterministic.
        """
        table = self._table(k)
        if not table:
            raise EmptyPrefixTable(f"prefix table for length {k} is empty")
        query = tuple(query)
        if len(query) > k - 1:
            query = query[len(query) - (k - 1):]
        if len(query) != k - 1:
            raise ValueError(f"query must hold {k - 1} tokens, got {len(query)}")
        matched, distance, ties = self.match_prefix(k, query)
        labels = table[matched]
        token, count = max(labels.items(), key=lambda kv: (kv[1], -kv[0]))
        return Prediction(
            predicted=token,
            predicted_command=self.vocab.command_of(token),
            matched_prefix=matched,
            distance=distance,
            match_frequency=count,
            distance_ties=ties,
            exact=distance == 0.0,
        )


def train(subchains: Iterable[SubChain], vocab: Vocabulary) -> FrequencyModel:
    """Count (prefix, label) multiplicities into a frequency model.

    The model keeps its own copy of the vocabulary so later encoding of
    unseen commands cannot disturb it.
    """
    per_k: dict[int, PrefixTable] = {}
    for sc in subchains:
        labels = per_k.setdefault(sc.k, {}).setdefault(sc.prefix, {})
        labels[sc.label] = labels.get(sc.label, 0) + 1
    if not per_k:
        raise EmptyTrainingSet("no training sub-chains at any window length")
    return FrequencyModel(per_k=per_k, vocab=vocab.copy())


def save_model(model: FrequencyModel, path: str | Path) -> None:
    """Write the model as a versioned JSON document.

    Token ids in the file are indices into the "vocab" array. Tables,
    prefixes, and labels are emitted in sorted order so identical models
    produce identical bytes.
    """
    if not model.per_k:
        raise EmptyTrainingSet("refusing to save an empty model")
    k_tables = {}
    for k in sorted(model.per_k):
        entries = []
        for prefix in sorted(model.per_k[k]):
            labels = model.per_k[k][prefix]
            entries.append(
                {
                    "prefix": list(prefix),
                    "labels": {str(tok): labels[tok] for tok in sorted(labels)},
                }
            )
        k_tables[str(k)] = entries
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "vocab": model.vocab.as_list(),
        "k_tables": k_tables,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str | Path) -> FrequencyModel:
    """Load a model file, validating format, version, and token ranges."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError:
            raise FormatVersionMismatch(f"{path}: not a JSON model file") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatVersionMismatch(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise FormatVersionMismatch(
            f"{path}: version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    vocab_list = doc.get("vocab")
    k_tables = doc.get("k_tables")
    if not isinstance(vocab_list, list) or not isinstance(k_tables, dict):
        raise FormatVersionMismatch(f"{path}: malformed model document")
    size = len(vocab_list)
    per_k: dict[int, PrefixTable] = {}
    try:
        for k_str, entries in k_tables.items():
            k = int(k_str)
            table: PrefixTable = {}
            for entry in entries:
                prefix = tuple(int(t) for t in entry["prefix"])
                labels = {int(t): int(c) for t, c in entry["labels"].items()}
                if len(prefix) != k - 1:
                    raise ValueError("prefix length mismatch")
                if any(t < 0 or t >= size for t in (*prefix, *labels)):
                    raise ValueError("token out of vocabulary range")
                if any(c < 1 for c in labels.values()):
                    raise ValueError("non-positive count")
                table[prefix] = labels
            per_k[k] = table
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatVersionMismatch(f"{path}: malformed model document ({exc})") from None
    return FrequencyModel(per_k=per_k, vocab=Vocabulary(vocab_list))
