"""Group command events into login sessions and persist the corpus.

A session is one attacker login; Cowrie's session id is only unique per
honeypot host, so the grouping key is (sensor, session_id). The corpus
file is newline-delimited JSON with a versioned header line, so it can
be streamed and diffed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .errors import FormatVersionMismatch
from .ingest import COMMAND_EVENT, CowrieEvent, parse_timestamp

CORPUS_FORMAT = "chainwatch-corpus"
CORPUS_VERSION = 1


@dataclass(frozen=True)
class SessionRecord:
    """All command events of one login session, timestamp-ordered."""

    session_id: str
    sensor: str
    source_ip: str
    events: tuple[tuple[datetime, str], ...]  # (timestamp, command)

    @property
    def key(self) -> tuple[str, str]:
        return (self.sensor, self.session_id)

    @property
    def commands(self) -> tuple[str, ...]:
        return tuple(cmd for _, cmd in self.events)

    def __post_init__(self):
        if not self.events:
            raise ValueError("a session must contain at least one event")


@dataclass
class Corpus:
    """An immutable bag of sessions plus provenance metadata."""

    sessions: list[SessionRecord] = field(default_factory=list)
    created_at: datetime = field(
        default_factory=lambda: datetime.now(tz=timezone.utc)
    )
    source: str = ""

    def __len__(self) -> int:
        return len(self.sessions)

    def event_count(self) -> int:
        return sum(len(s.events) for s in self.sessions)

    def fingerprint(self) -> str:
        """Content hash over session data (metadata excluded)."""
        h = hashlib.sha256()
        for sess in sorted(self.sessions, key=lambda s: s.key):
            h.update(json.dumps(_session_to_json(sess), sort_keys=True).encode())
        return h.hexdigest()


def group_sessions(
    events: Iterable[CowrieEvent],
    source: str = "",
    created_at: datetime | None = None,
) -> Corpus:
    """Group command events by (sensor, session_id) into a corpus.

    Events inside a session are sorted by timestamp; equal timestamps keep
    their ingest order (seq), so any shuffling of the input stream yields
    the same corpus. Sessions are ordered by their grouping key.
    """
    buckets: dict[tuple[str, str], list[CowrieEvent]] = {}
    for ev in events:
        if ev.event_id != COMMAND_EVENT:
            raise ValueError("group_sessions expects command events only")
        buckets.setdefault((ev.sensor, ev.session_id), []).append(ev)

    sessions = []
    for key in sorted(buckets):
        evs = sorted(buckets[key], key=lambda e: (e.timestamp, e.seq))
        sessions.append(
            SessionRecord(
                session_id=key[1],
                sensor=key[0],
                source_ip=evs[0].source_ip,
                events=tuple((e.timestamp, e.command or "") for e in evs),
            )
        )
    if created_at is None:
        created_at = datetime.now(tz=timezone.utc)
    return Corpus(sessions=sessions, created_at=created_at, source=source)


def _session_to_json(sess: SessionRecord) -> dict:
    return {
        "session_id": sess.session_id,
        "sensor": sess.sensor,
        "source_ip": sess.source_ip,
        "events": [[ts.isoformat(), cmd] for ts, cmd in sess.events],
    }


def _session_from_json(obj: dict) -> SessionRecord:
    return SessionRecord(
        session_id=obj["session_id"],
        sensor=obj["sensor"],
        source_ip=obj["source_ip"],
        events=tuple((parse_timestamp(ts), cmd) for ts, cmd in obj["events"]),
    )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus as NDJSON: one header line, one session per line."""
    header = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "created_at": corpus.created_at.isoformat(),
        "source": corpus.source,
        "sessions": len(corpus.sessions),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for sess in corpus.sessions:
            fh.write(json.dumps(_session_to_json(sess), sort_keys=True) + "\n")


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus file, failing closed on truncation or wrong version."""
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError:
            raise FormatVersionMismatch(f"{path}: missing corpus header") from None
        if not isinstance(header, dict) or header.get("format") != CORPUS_FORMAT:
            raise FormatVersionMismatch(f"{path}: not a {CORPUS_FORMAT} file")
        if header.get("version") != CORPUS_VERSION:
            raise FormatVersionMismatch(
                f"{path}: version {header.get('version')!r}, expected {CORPUS_VERSION}"
            )
        sessions = []
        for line in fh:
            if not line.strip():
                continue
            try:
                sessions.append(_session_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError):
                raise FormatVersionMismatch(f"{path}: corrupt session line") from None
        declared = header.get("sessions")
        if declared is not None and declared != len(sessions):
            raise FormatVersionMismatch(
                f"{path}: truncated (expected {declared} sessions, got {len(sessions)})"
            )
    return Corpus(
        sessions=sessions,
        created_at=parse_timestamp(header["created_at"]),
        source=header.get("source", ""),
    )
