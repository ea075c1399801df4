"""Vocabulary, word-vector loading, tokenization and sentence encoding.

Sentences become fixed-size matrices: one embedding row per word, then
all-zero rows up to the model's maximum length. The <unk> vector is never
all-zero, so the all-zero gate in the convolution layers fires only on
genuine padding.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

UNK = "<unk>"


class Vocabulary:
    """Token <-> index map with index 0 reserved for <unk>."""

    def __init__(self):
        self.token_to_index = {UNK: 0}
        self.index_to_token = [UNK]

    def add(self, token: str) -> int:
        if token in self.token_to_index:
            return self.token_to_index[token]
        idx = len(self.index_to_token)
        self.token_to_index[token] = idx
        self.index_to_token.append(token)
        return idx

    def index(self, token: str) -> int:
        """Index of token, or 0 (<unk>) when absent."""
        return self.token_to_index.get(token, 0)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def __len__(self) -> int:
        return len(self.index_to_token)


@dataclass
class EmbeddingTable:
    """Word vectors, one row per vocabulary entry (row 0 is <unk>)."""

    vocab: Vocabulary
    dim: int
    vectors: np.ndarray  # [len(vocab), dim]

    def row(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab.index(token)]


@dataclass
class EncodedSentence:
    """Padded input matrix plus the word ids and true token count."""

    ids: list[int]
    length: int
    x: np.ndarray  # [max_len, dim]; rows length.. are all-zero


@dataclass
class RunStats:
    """Counters surfaced to the user after a run."""

    sentences: int = 0
    truncated: int = 0
    hard_negative_fallbacks: int = 0
    hard_negatives: int = 0
    shuffle_skipped: int = 0
    extras: dict = field(default_factory=dict)


def tokenize(line: str) -> list[str]:
    """Split on runs of whitespace; no other normalization."""
    return line.split()


def load_embeddings(source) -> EmbeddingTable:
    """Parse word2vec text format: header "V D", then V lines "token v1 .. vD".

    The <unk> row is set to the arithmetic mean of all loaded vectors.
    `source` is an iterable of text lines (an open file works).
    """
    lines = iter(source)
    try:
        header = next(lines)
    except StopIteration:
        raise ParseError("empty embedding source", line=1)
    parts = header.split()
    if len(parts) != 2:
        raise ParseError(f"malformed header {header.strip()!r}; expected 'V D'", line=1)
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"malformed header {header.strip()!r}; expected two integers", line=1)
    if count < 1 or dim < 1:
        raise ParseError(f"header must declare positive counts, got {count} {dim}", line=1)

    vocab = Vocabulary()
    rows = [np.zeros(dim)]  # placeholder for <unk>, filled below
    for lineno, raw in enumerate(lines, start=2):
        if lineno - 1 > count:
            break
        fields = raw.split()
        if not fields:
            raise ParseError("blank line inside vector block", line=lineno)
        token = fields[0]
        if token in vocab:
            raise ParseError(f"duplicate token {token!r}", line=lineno)
        if len(fields) - 1 != dim:
            raise ParseError(
                f"token {token!r} has {len(fields) - 1} values, expected {dim}", line=lineno
            )
        try:
            vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError:
            raise ParseError(f"non-numeric value in vector for {token!r}", line=lineno)
        vocab.add(token)
        rows.append(vec)
    loaded = len(rows) - 1
    if loaded != count:
        raise ParseError(f"header declared {count} vectors but {loaded} were found", line=1 + loaded)

    vectors = np.vstack(rows)
    vectors[0] = vectors[1:].mean(axis=0)
    if not vectors[0].any():
        raise DataError("mean of loaded vectors is all-zero; <unk> would be gated off as padding")
    return EmbeddingTable(vocab=vocab, dim=dim, vectors=vectors)


def random_embeddings(tokens, dim: int, rng: np.random.Generator) -> EmbeddingTable:
    """Uniform [-1, 1] vectors for a token set; all-zero rows are resampled.

    Tokens are sorted before assignment so the table depends only on the
    set and the seed.
    """
    if dim < 1:
        raise DataError(f"embedding dim must be >= 1, got {dim}")
    vocab = Vocabulary()
    ordered = sorted(set(tokens))
    n = len(ordered) + 1
    vectors = np.empty((n, dim), dtype=np.float64)
    for i in range(n):
        while True:
            vec = rng.uniform(-1.0, 1.0, size=dim)
            if vec.any():
                break
        vectors[i] = vec
    for token in ordered:
        vocab.add(token)
    return EmbeddingTable(vocab=vocab, dim=dim, vectors=vectors)


def encode_sentence(tokens, table: EmbeddingTable, max_len: int,
                    stats: RunStats | None = None) -> EncodedSentence:
    """Map tokens to a padded [max_len, dim] matrix.

    Unknown tokens map to <unk>; sentences longer than max_len are
    truncated (counted in stats, not an error).
    """
    if not tokens:
        raise DataError("cannot encode an empty sentence")
    if max_len < 1:
        raise DataError(f"max_len must be >= 1, got {max_len}")
    if stats is not None:
        stats.sentences += 1
    if len(tokens) > max_len:
        if stats is not None:
            stats.truncated += 1
        tokens = tokens[:max_len]
    ids = [table.vocab.index(t) for t in tokens]
    x = np.zeros((max_len, table.dim), dtype=np.float64)
    x[: len(ids)] = table.vectors[ids]
    return EncodedSentence(ids=ids, length=len(ids), x=x)


def write_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write the table back in word2vec text format (excluding <unk>)."""
    with open(path, "w", encoding="utf-8") as fh:
        n = len(table.vocab) - 1
        fh.write(f"{n} {table.dim}\n")
        for idx in range(1, len(table.vocab)):
            token = table.vocab.index_to_token[idx]
            vals = " ".join(repr(float(v)) for v in table.vectors[idx])
            fh.write(f"{token} {vals}\n")
