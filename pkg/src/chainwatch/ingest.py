"""Parse Cowrie JSON-lines logs into validated event records.

Cowrie writes one JSON object per line. Only ``cowrie.command.input``
events carry the shell command an attacker typed; everything else is
session/SSH bookkeeping. Malformed lines are reported, never fatal.
"""

from __future__ import annotations

import gzip
import io
import json
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Iterator

from .errors import BadTimestamp, MalformedJson, MissingField, ParseError

COMMAND_EVENT = "cowrie.command.input"

GZIP_MAGIC = b"\x1f\x8b"

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})"
    r"(?:\.(\d+))?"
    r"(Z|[+-]\d{2}:?\d{2})?$"
)


@dataclass(frozen=True)
class CowrieEvent:
    """One parsed honeypot log record.

    ``command`` is present if and only if the event is a shell command
    input. ``seq`` is the ingest sequence number assigned at parse time;
    it makes equal-timestamp ordering stable even if the stream is later
    shuffled.
    """

    event_id: str
    timestamp: datetime
    session_id: str
    source_ip: str = ""
    sensor: str = ""
    message: str = ""
    command: str | None = None
    seq: int = 0

    def __post_init__(self):
        if (self.command is not None) != (self.event_id == COMMAND_EVENT):
            raise ValueError(
                "command must be present exactly for %r events" % COMMAND_EVENT
            )

    def as_dict(self) -> dict:
        """Re-serialize the known Cowrie attributes (field values exact)."""
        out = {
            "eventid": self.event_id,
            "timestamp": self.timestamp.isoformat(),
            "message": self.message,
            "src_ip": self.source_ip,
            "session": self.session_id,
            "sensor": self.sensor,
        }
        if self.command is not None:
            out["command"] = self.command
        return out


@dataclass(frozen=True)
class RawDocument:
    """Verbatim wrapper around one original log line."""

    payload: bytes
    origin: str
    received_at: datetime
    type_tag: str = "cowrie"


def wrap_raw(line: bytes, origin: str, now: datetime) -> RawDocument:
    """Wrap a raw log line byte-exactly, tagged with its source."""
    return RawDocument(payload=line, origin=origin, received_at=now)


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 instant, normalized to UTC with microseconds.

    Accepts with or without fractional seconds and with "Z", numeric
    offsets, or no offset (treated as UTC). Fractions beyond microseconds
    are truncated.
    """
    m = _TS_RE.match(text.strip())
    if m is None:
        raise ValueError(f"unparseable timestamp {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7) or ""
    micro = int(frac[:6].ljust(6, "0")) if frac else 0
    offset = m.group(8)
    if offset is None or offset == "Z":
        tz = timezone.utc
    else:
        sign = 1 if offset[0] == "+" else -1
        oh, om = int(offset[1:3]), int(offset[-2:])
        from datetime import timedelta

        tz = timezone(sign * timedelta(hours=oh, minutes=om))
    dt = datetime(year, month, day, hour, minute, second, micro, tzinfo=tz)
    return dt.astimezone(timezone.utc)


def parse_event(line: str, line_no: int = 0, origin: str = "", seq: int = 0) -> CowrieEvent:
    """Parse one Cowrie JSON log line.

    Unknown extra fields are ignored. The command is captured verbatim
    except for a trailing newline. Both "command" and "input" are accepted
    as the command key (Cowrie versions differ), preferring "command".

    Raises MalformedJson, MissingField, or BadTimestamp; errors carry the
    line number so callers can keep streaming.
    """
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedJson(f"not valid JSON ({exc.msg if hasattr(exc, 'msg') else exc})",
                            origin, line_no) from None
    if not isinstance(obj, dict):
        raise MalformedJson("line is not a JSON object", origin, line_no)

    event_id = obj.get("eventid")
    if not isinstance(event_id, str) or not event_id:
        raise MissingField("missing eventid", origin, line_no)
    ts_raw = obj.get("timestamp")
    if not isinstance(ts_raw, str) or not ts_raw:
        raise MissingField("missing timestamp", origin, line_no)
    session = obj.get("session")
    if not isinstance(session, str) or not session:
        raise MissingField("missing session", origin, line_no)
    try:
        timestamp = parse_timestamp(ts_raw)
    except ValueError as exc:
        raise BadTimestamp(str(exc), origin, line_no) from None

    command = None
    if event_id == COMMAND_EVENT:
        raw_cmd = obj.get("command", obj.get("input"))
        if not isinstance(raw_cmd, str):
            raise MissingField("command event without command/input", origin, line_no)
        command = raw_cmd[:-1] if raw_cmd.endswith("\n") else raw_cmd

    message = obj.get("message", obj.get("msg", ""))
    if not isinstance(message, str):
        message = str(message)

    return CowrieEvent(
        event_id=event_id,
        timestamp=timestamp,
        session_id=session,
        source_ip=str(obj.get("src_ip", "")),
        sensor=str(obj.get("sensor", "")),
        message=message,
        command=command,
        seq=seq,
    )


def filter_command_events(events: Iterable[CowrieEvent]) -> Iterator[CowrieEvent]:
    """Keep only shell-command events, preserving input order."""
    return (ev for ev in events if ev.event_id == COMMAND_EVENT)


def open_log(path: str | Path) -> io.TextIOWrapper:
    """Open a log file for line reading, transparently gunzipping.

    Compression is detected from the magic bytes, not the file name.
    "-" means standard input.
    """
    if str(path) == "-":
        return sys.stdin
    fh: BinaryIO = open(path, "rb")
    magic = fh.read(2)
    fh.seek(0)
    if magic == GZIP_MAGIC:
        return io.TextIOWrapper(gzip.GzipFile(fileobj=fh), encoding="utf-8", errors="replace")
    return io.TextIOWrapper(fh, encoding="utf-8", errors="replace")


@dataclass
class ParseStats:
    """Counts accumulated while streaming a set of log files."""

    parsed: int = 0
    errors: int = 0
    error_list: list[ParseError] = field(default_factory=list)


def read_events(
    paths: Iterable[str | Path],
    stats: ParseStats | None = None,
    on_error: Callable[[ParseError], None] | None = None,
) -> Iterator[CowrieEvent]:
    """Stream events from log files (plain, gzip, or "-" for stdin).

    Malformed lines never abort the stream: each is turned into a
    line-addressed ParseError handed to ``on_error`` (default: recorded
    in ``stats``). Ingest sequence numbers run across all files so the
    merged stream keeps a stable order for equal timestamps.
    """
    seq = 0
    for path in paths:
        origin = str(path)
        fh = open_log(path)
        try:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = parse_event(line, line_no=line_no, origin=origin, seq=seq)
                except ParseError as exc:
                    if stats is not None:
                        stats.errors += 1
                        stats.error_list.append(exc)
                    if on_error is not None:
                        on_error(exc)
                    continue
                seq += 1
                if stats is not None:
                    stats.parsed += 1
                yield event
        finally:
            if fh is not sys.stdin:
                fh.close()


def report_error(exc: ParseError) -> None:
    """Write one diagnostic line ("file:line: reason") to stderr."""
    print(str(exc), file=sys.stderr)
