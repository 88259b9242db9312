"""Seeded generator of Mirai-style synthetic session corpora.

Real IoT-botnet traffic is one dominant command loop with small
variation, so the generator is an order-2 Markov process over a small
vocabulary: a deterministic backbone cycle, a few branching contexts,
and uniform replacement noise. Everything is a pure function of the
spec (seed included), so corpora are reproducible byte for byte.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import InvalidSpec
from .session_store import Corpus, SessionRecord

_BASE_TIME = datetime(2019, 8, 27, 0, 0, 0, tzinfo=timezone.utc)

_PROB_TOLERANCE = 1e-9

# Shell strings of the kind Mirai-family bots type after login; used to
# name tokens in the default spec so corpora read like real logs.
MIRAI_COMMAND_NAMES = (
    "shell",
    "system",
    "enable",
    "/var/run/.ptmx",
    "/etc/.ptmx",
    "cp",
    "/usr/.ptmx",
    "/boot/.ptmx",
    "while",
    "chmod",
    "cat",
    "%{input[0]}",
    "/var/.ptmx",
    "/dev/.ptmx",
    "/dev/shm/.ptmx",
    "rm",
    "/bin/.ptmx",
    "/var/tmp/.ptmx",
    "/tmp/.ptmx",
    ">/.ptmx",
    "/.ptmx",
    "sh",
    "/mnt/.ptmx",
    "/dev/netslink/.ptmx",
    "wget",
    "tftp",
    "linuxshell",
    "./19ju3d",
)

Transition = dict[tuple[int, ...], dict[int, float]]


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the synthetic session process.

    Contexts missing from ``transition`` (reachable only through noise)
    fall back to the deterministic successor (last token + 1) mod
    vocab_size, which rejoins the backbone cycle; the process stays a
    total, learnable order-``order`` chain.
    """

    vocab_size: int = 28
    order: int = 2
    transition: Transition = field(default_factory=dict)
    noise: float = 0.0
    session_length: tuple[int, int] = (6, 20)
    n_sessions: int = 1000
    seed: int = 0
    command_names: tuple[str, ...] | None = None
    start_context: tuple[int, ...] | None = None

    def validate(self) -> None:
        if self.vocab_size < 1:
            raise InvalidSpec("vocab_size must be positive")
        if self.order < 1:
            raise InvalidSpec("order must be positive")
        if not 0.0 <= self.noise <= 1.0:
            raise InvalidSpec("noise must lie in [0, 1]")
        lo, hi = self.session_length
        if lo < 1 or hi < lo:
            raise InvalidSpec("session_length must satisfy 1 <= lo <= hi")
        if self.n_sessions < 0:
            raise InvalidSpec("n_sessions must be non-negative")
        for ctx, dist in self.transition.items():
            if len(ctx) != self.order:
                raise InvalidSpec(f"context {ctx} is not {self.order} tokens")
            if any(t < 0 or t >= self.vocab_size for t in (*ctx, *dist)):
                raise InvalidSpec(f"context {ctx} uses out-of-range tokens")
            if any(p < 0 for p in dist.values()):
                raise InvalidSpec(f"context {ctx} has a negative probability")
            if abs(sum(dist.values()) - 1.0) > _PROB_TOLERANCE:
                raise InvalidSpec(f"distribution for context {ctx} does not sum to 1")
        if self.command_names is not None and len(self.command_names) != self.vocab_size:
            raise InvalidSpec("command_names must name every token")
        if self.start_context is not None:
            if len(self.start_context) != self.order:
                raise InvalidSpec("start_context must be order tokens long")
            if any(t < 0 or t >= self.vocab_size for t in self.start_context):
                raise InvalidSpec("start_context uses out-of-range tokens")

    def command_name(self, token: int) -> str:
        if self.command_names is not None:
            return self.command_names[token]
        return f"cmd_{token}"

    def to_json(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "order": self.order,
            "transition": {
                ",".join(map(str, ctx)): {str(t): p for t, p in sorted(dist.items())}
                for ctx, dist in sorted(self.transition.items())
            },
            "noise": self.noise,
            "session_length": list(self.session_length),
            "n_sessions": self.n_sessions,
            "seed": self.seed,
            "command_names": list(self.command_names) if self.command_names else None,
            "start_context": list(self.start_context) if self.start_context else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorSpec":
        return cls(
            vocab_size=obj["vocab_size"],
            order=obj["order"],
            transition={
                tuple(int(t) for t in ctx.split(",")): {
                    int(t): float(p) for t, p in dist.items()
                }
                for ctx, dist in obj["transition"].items()
            },
            noise=float(obj["noise"]),
            session_length=tuple(obj["session_length"]),
            n_sessions=obj["n_sessions"],
            seed=obj["seed"],
            command_names=tuple(obj["command_names"]) if obj.get("command_names") else None,
            start_context=tuple(obj["start_context"]) if obj.get("start_context") else None,
        )


def load_spec(path: str | Path) -> GeneratorSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return GeneratorSpec.from_json(json.load(fh))


def save_spec(spec: GeneratorSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_json(), fh, indent=2)
        fh.write("\n")


def cycle_transitions(vocab_size: int) -> Transition:
    """Deterministic backbone: context (i, i+1) always continues with i+2."""
    return {
        (i, (i + 1) % vocab_size): {(i + 2) % vocab_size: 1.0}
        for i in range(vocab_size)
    }


def default_mirai_like_spec(seed: int = 0, n_sessions: int = 1000) -> GeneratorSpec:
    """Fixed 28-command spec: backbone cycle, 3 branch contexts, noise 0.05.

    The branches jump off the cycle with probability 0.15 and rejoin via
    the fallback successor rule, which mimics the handful of alternative
    command orderings seen in bot traffic.
    """
    transition = cycle_transitions(28)
    transition[(4, 5)] = {6: 0.85, 21: 0.15}
    transition[(12, 13)] = {14: 0.85, 3: 0.15}
    transition[(20, 21)] = {22: 0.85, 9: 0.15}
    return GeneratorSpec(
        vocab_size=28,
        order=2,
        transition=transition,
        noise=0.05,
        session_length=(6, 20),
        n_sessions=n_sessions,
        seed=seed,
        command_names=MIRAI_COMMAND_NAMES,
        start_context=(0, 1),
    )


def deterministic_spec(seed: int = 0, n_sessions: int = 1000) -> GeneratorSpec:
    """Noise-free, branch-free variant: the next command is a pure function
    of the previous two, so a trained model can reach perfect accuracy."""
    return replace(
        default_mirai_like_spec(seed=seed, n_sessions=n_sessions),
        transition=cycle_transitions(28),
        noise=0.0,
    )


def _sample(dist: dict[int, float], rng: random.Random) -> int:
    """CDF walk in token order; one rng draw per step for reproducibility."""
    u = rng.random()
    acc = 0.0
    last = 0
    for token in sorted(dist):
        acc += dist[token]
        last = token
        if u < acc:
            return token
    return last


def _next_token(spec: GeneratorSpec, context: tuple[int, ...], rng: random.Random) -> int:
    dist = spec.transition.get(context)
    if dist is None:
        return (context[-1] + 1) % spec.vocab_size
    return _sample(dist, rng)


def generate(spec: GeneratorSpec) -> Corpus:
    """Generate a synthetic corpus; a pure function of the spec.

    Noise replaces only the recorded command: the underlying walk
    continues from the sampled token, so a corrupted entry perturbs the
    sequence without derailing it (the way a stray or mistyped command
    shows up inside an otherwise fixed bot script).
    """
    spec.validate()
    rng = random.Random(spec.seed)
    start = spec.start_context or tuple(
        i % spec.vocab_size for i in range(spec.order)
    )
    lo, hi = spec.session_length
    sessions = []
    for s in range(spec.n_sessions):
        length = rng.randint(lo, hi)
        walk = list(start[:length])
        tokens = list(walk)
        while len(tokens) < length:
            sampled = _next_token(spec, tuple(walk[-spec.order:]), rng)
            walk.append(sampled)
            emitted = sampled
            if spec.noise > 0.0 and rng.random() < spec.noise:
                emitted = rng.randrange(spec.vocab_size)
            tokens.append(emitted)
        begin = _BASE_TIME + timedelta(hours=s)
        sessions.append(
            SessionRecord(
                session_id=f"synth-{s:06d}",
                sensor="synthetic",
                source_ip=f"198.51.100.{s % 254 + 1}",
                events=tuple(
                    (begin + timedelta(seconds=i), spec.command_name(t))
                    for i, t in enumerate(tokens)
                ),
            )
        )
    return Corpus(
        sessions=sessions,
        created_at=_BASE_TIME,
        source=f"synthetic generator, seed={spec.seed}",
    )
