from __future__ import annotations

import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainwatch.session_store import Corpus, SessionRecord
from chainwatch.synth import default_mirai_like_spec, deterministic_spec, generate

DATA_DIR = Path(__file__).parent / "data"

T0 = datetime(2019, 8, 27, 10, 0, 0, tzinfo=timezone.utc)


def make_session(session_id: str, commands, sensor: str = "hp-test", start=T0):
    """Session with the given commands one second apart."""
    return SessionRecord(
        session_id=session_id,
        sensor=sensor,
        source_ip="203.0.113.1",
        events=tuple(
            (start + timedelta(seconds=i), cmd) for i, cmd in enumerate(commands)
        ),
    )


def make_corpus(*command_lists) -> Corpus:
    return Corpus(
        sessions=[
            make_session(f"s{i:03d}", cmds) for i, cmds in enumerate(command_lists)
        ],
        created_at=T0,
        source="test",
    )


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def clean_corpus():
    """Deterministic noise-free synthetic corpus (every window learnable)."""
    return generate(deterministic_spec(seed=0, n_sessions=150))


@pytest.fixture(scope="session")
def noisy_corpus():
    return generate(default_mirai_like_spec(seed=0, n_sessions=400))
