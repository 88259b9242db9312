"""chainwatch: attacker command-chain reconstruction and next-command prediction.

Pipeline: Cowrie JSON logs -> command events -> login sessions -> integer
command chains -> fixed-length sub-chains -> frequency model -> nearest
prefix prediction, plus a split/accuracy/timing evaluation harness and a
seeded synthetic corpus generator.
"""

from .chains import CommandChain, SubChain, Vocabulary, build_chain, split_subchains
from .errors import (
    BadTimestamp,
    ChainwatchError,
    EmptyPrefixTable,
    EmptyTrainingSet,
    FormatVersionMismatch,
    InsufficientData,
    InvalidSpec,
    MalformedJson,
    MissingField,
    NoModelForLength,
    ParseError,
    TooFewSessions,
)
from .evaluation import (
    EvalReport,
    LengthReport,
    evaluate,
    run_evaluation,
    scaling_experiment,
    split_dataset,
    top_sequences,
)
from .ingest import (
    CowrieEvent,
    RawDocument,
    filter_command_events,
    parse_event,
    read_events,
    wrap_raw,
)
from .predictor import (
    FrequencyModel,
    Prediction,
    levenshtein,
    load_model,
    normalized_levenshtein,
    save_model,
    train,
)
from .session_store import Corpus, SessionRecord, group_sessions, load_corpus, save_corpus
from .synth import GeneratorSpec, default_mirai_like_spec, deterministic_spec, generate

__version__ = "0.1.0"
