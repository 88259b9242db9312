"""Encode commands as integer tokens and cut chains into windows.

Each distinct command string gets a dense token in first-seen order.
A chain is one session's token sequence; a sub-chain is a consecutive
window of k tokens whose first k-1 tokens are the prefix and whose last
token is the label (the actual next command).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .session_store import SessionRecord

DEFAULT_K_MIN = 3
DEFAULT_K_MAX = 11


def normalize_command(command: str) -> str:
    """Canonical form used for token assignment.

    Strips a trailing newline and surrounding whitespace; no shell
    tokenization, so "cd /tmp; wget x" stays one command.
    """
    if command.endswith("\n"):
        command = command[:-1]
    return command.strip()


class Vocabulary:
    """Bijective command-string <-> token map, dense 0..n-1, first-seen order."""

    def __init__(self, commands: list[str] | None = None):
        self._commands: list[str] = []
        self._tokens: dict[str, int] = {}
        for cmd in commands or []:
            self.encode(cmd)

    def __len__(self) -> int:
        return len(self._commands)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._commands == other._commands

    def encode(self, command: str) -> int:
        """Return the command's token, appending a new one if unseen."""
        cmd = normalize_command(command)
        token = self._tokens.get(cmd)
        if token is None:
            token = len(self._commands)
            self._tokens[cmd] = token
            self._commands.append(cmd)
        return token

    def lookup(self, command: str) -> int | None:
        """Token for a known command, or None (never grows the vocabulary)."""
        return self._tokens.get(normalize_command(command))

    def command_of(self, token: int) -> str:
        return self._commands[token]

    def as_list(self) -> list[str]:
        return list(self._commands)

    def copy(self) -> "Vocabulary":
        return Vocabulary(self._commands)


@dataclass(frozen=True)
class CommandChain:
    """Integer-encoded command sequence of one session."""

    session_key: tuple[str, str]  # (sensor, session_id)
    tokens: tuple[int, ...]
    timestamps: tuple[datetime, ...]

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise ValueError("a chain holds at least one command")
        if len(self.tokens) != len(self.timestamps):
            raise ValueError("tokens and timestamps must align 1:1")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SubChain:
    """Fixed-length window: k-1 prefix tokens plus the next-command label."""

    k: int
    prefix: tuple[int, ...]
    label: int

    def __post_init__(self):
        if len(self.prefix) != self.k - 1:
            raise ValueError("prefix length must be k-1")


def build_chain(session: SessionRecord, vocab: Vocabulary) -> CommandChain:
    """Encode one session's commands (already timestamp-ordered)."""
    return CommandChain(
        session_key=session.key,
        tokens=tuple(vocab.encode(cmd) for _, cmd in session.events),
        timestamps=tuple(ts for ts, _ in session.events),
    )


def split_subchains(chain: CommandChain, k: int) -> list[SubChain]:
    """All consecutive length-k windows of the chain, left to right.

    A chain of length L yields max(0, L-k+1) windows; chains shorter than
    k contribute nothing (no padding).
    """
    if k < 2:
        raise ValueError("window length must be at least 2")
    toks = chain.tokens
    return [
        SubChain(k=k, prefix=toks[i : i + k - 1], label=toks[i + k - 1])
        for i in range(len(toks) - k + 1)
    ]
