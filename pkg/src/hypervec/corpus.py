"""Parallel-corpus ingestion, shared bilingual vocabulary, and pair generation.

The input is an OPUS-style export: two UTF-8 text files, line-aligned, one
sentence per line. Both sides are tokenized into a single merged vocabulary,
so words spelled identically in the two languages collide into one entry (a
documented consequence of training both languages in one space; pass
``lang_tags=True`` to prefix tokens with ``de:`` / ``en:`` for collision-free
experiments).

Training pairs come in two kinds: monolingual skip-gram pairs with a dynamic
window (the per-position span is drawn uniformly from ``[1, window]``), and
cross-lingual pairs built by matching token indices across a sentence pair.
The stream interleaves them sentence by sentence so the corpus is consumed in
a single pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import HypervecError


class CorpusError(HypervecError, ValueError):
    """Malformed corpus input or an empty result where data is required."""


class OutOfVocabularyError(HypervecError, KeyError):
    """A word lookup failed against the trained vocabulary."""


def tokenize_line(line: str) -> list[str]:
    """Split on Unicode whitespace and lowercase; no other normalization."""
    return line.lower().split()


@dataclass
class SentencePair:
    """One line-aligned sentence pair, already tokenized."""

    src_tokens: list[str]
    tgt_tokens: list[str]


class PairKind(enum.Enum):
    MONOLINGUAL = "monolingual"
    CROSS_LINGUAL = "cross_lingual"


class TrainingPair(NamedTuple):
    center: int
    context: int
    kind: PairKind


def _read_tokenized_lines(path: str | Path, tag: str | None) -> list[list[str]]:
    lines = []
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    for lineno, line in enumerate(raw.splitlines(), start=1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: invalid UTF-8 ({exc})") from exc
        tokens = tokenize_line(text)
        if tag:
            tokens = [tag + t for t in tokens]
        lines.append(tokens)
    return lines


class ParallelCorpusReader:
    """Re-iterable stream of :class:`SentencePair` from two line-aligned files.

    Pairs where either side tokenizes to empty are dropped; the count of
    dropped pairs is available as ``.dropped`` after a full pass. A line-count
    mismatch between the files is fatal.
    """

    def __init__(self, src_path, tgt_path, lang_tags: bool = False,
                 src_tag: str = "de:", tgt_tag: str = "en:"):
        self.src_path = src_path
        self.tgt_path = tgt_path
        self.src_tag = src_tag if lang_tags else None
        self.tgt_tag = tgt_tag if lang_tags else None
        self.dropped = 0

    def __iter__(self) -> Iterator[SentencePair]:
        src_lines = _read_tokenized_lines(self.src_path, self.src_tag)
        tgt_lines = _read_tokenized_lines(self.tgt_path, self.tgt_tag)
        if len(src_lines) != len(tgt_lines):
            raise CorpusError(
                f"line count mismatch: {self.src_path} has {len(src_lines)} lines, "
                f"{self.tgt_path} has {len(tgt_lines)} lines"
            )
        self.dropped = 0
        for src, tgt in zip(src_lines, tgt_lines):
            if not src or not tgt:
                self.dropped += 1
                continue
            yield SentencePair(src, tgt)


def load_parallel_corpus(src_path, tgt_path, lang_tags: bool = False) -> ParallelCorpusReader:
    return ParallelCorpusReader(src_path, tgt_path, lang_tags=lang_tags)


@dataclass
class Vocabulary:
    """Bidirectional word/id mapping over the merged bilingual token set.

    Ids are assigned by descending corpus count, ties broken lexicographically,
    so id order and dump order coincide.
    """

    word_to_id: dict[str, int]
    id_to_word: list[str]
    counts: np.ndarray
    total_tokens: int
    min_count: int

    def __len__(self) -> int:
        return len(self.id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id

    def id_of(self, word: str) -> int:
        try:
            return self.word_to_id[word]
        except KeyError:
            raise OutOfVocabularyError(f"word {word!r} is out of vocabulary") from None

    def get(self, word: str) -> int | None:
        return self.word_to_id.get(word)

    def encode_aligned(self, tokens: Sequence[str]) -> np.ndarray:
        """Position-preserving id array; out-of-vocabulary tokens become -1."""
        return np.fromiter(
            (self.word_to_id.get(t, -1) for t in tokens), dtype=np.int64, count=len(tokens)
        )

    def has_counts(self) -> bool:
        return bool(len(self)) and bool(np.all(self.counts > 0))

    @classmethod
    def from_counts(cls, counts: dict[str, int], min_count: int) -> "Vocabulary":
        retained = sorted(
            ((w, c) for w, c in counts.items() if c >= min_count),
            key=lambda wc: (-wc[1], wc[0]),
        )
        if not retained:
            raise CorpusError(
                f"no words reach min_count={min_count}; vocabulary would be empty"
            )
        words = [w for w, _ in retained]
        count_arr = np.array([c for _, c in retained], dtype=np.int64)
        return cls(
            word_to_id={w: i for i, w in enumerate(words)},
            id_to_word=words,
            counts=count_arr,
            total_tokens=int(count_arr.sum()),
            min_count=min_count,
        )


def build_vocabulary(pairs: Iterable[SentencePair], min_count: int) -> Vocabulary:
    """Count tokens from both sides of the corpus and keep those >= min_count."""
    if min_count < 1:
        raise CorpusError(f"min_count must be >= 1, got {min_count}")
    counts: dict[str, int] = {}
    for pair in pairs:
        for token in pair.src_tokens:
            counts[token] = counts.get(token, 0) + 1
        for token in pair.tgt_tokens:
            counts[token] = counts.get(token, 0) + 1
    return Vocabulary.from_counts(counts, min_count)


def write_vocab_dump(vocab: Vocabulary, path) -> None:
    """Write ``word<TAB>count`` lines in descending-count (= id) order."""
    with open(path, "w", encoding="utf-8") as out:
        for word, count in zip(vocab.id_to_word, vocab.counts):
            out.write(f"{word}\t{int(count)}\n")


def read_vocab_dump(path) -> dict[str, int]:
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 'word<TAB>count'")
            try:
                counts[parts[0]] = int(parts[1])
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: count is not an integer") from None
    return counts


def skipgram_pairs(token_ids: Sequence[int], window: int,
                   rng: np.random.Generator) -> Iterator[TrainingPair]:
    """Dynamic-window skip-gram pairs over one sentence of in-vocabulary ids.

    For each position the span ``b`` is drawn uniformly from ``[1, window]``
    and every neighbor within ``b`` positions is paired with the center.
    Deterministic given the rng state.
    """
    if window < 1:
        raise CorpusError(f"window must be >= 1, got {window}")
    n = len(token_ids)
    if n < 2:
        return
    spans = rng.integers(1, window + 1, size=n)
    for i in range(n):
        b = spans[i]
        lo = max(0, i - int(b))
        hi = min(n, i + int(b) + 1)
        center = int(token_ids[i])
        for j in range(lo, hi):
            if j != i:
                yield TrainingPair(center, int(token_ids[j]), PairKind.MONOLINGUAL)


def index_align_pairs(pair: SentencePair, vocab: Vocabulary) -> Iterator[TrainingPair]:
    """Cross-lingual pairs from matching token indices across a sentence pair.

    Emits both (src, tgt) and (tgt, src) at each index where both tokens are
    in vocabulary; indices beyond the shorter sentence yield nothing.
    """
    src_ids = vocab.encode_aligned(pair.src_tokens)
    tgt_ids = vocab.encode_aligned(pair.tgt_tokens)
    yield from _aligned_id_pairs(src_ids, tgt_ids)


def _aligned_id_pairs(src_ids: np.ndarray, tgt_ids: np.ndarray) -> Iterator[TrainingPair]:
    n = min(len(src_ids), len(tgt_ids))
    for i in range(n):
        s = int(src_ids[i])
        t = int(tgt_ids[i])
        if s >= 0 and t >= 0:
            yield TrainingPair(s, t, PairKind.CROSS_LINGUAL)
            yield TrainingPair(t, s, PairKind.CROSS_LINGUAL)


@dataclass
class NegativeTable:
    """Cumulative noise distribution over word ids, proportional to count^power."""

    cumulative: np.ndarray
    smoothing_power: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0.0)

    def __len__(self) -> int:
        return len(self.cumulative)


def build_negative_table(vocab: Vocabulary, smoothing_power: float = 0.75) -> NegativeTable:
    if not 0.0 < smoothing_power <= 1.0:
        raise CorpusError(f"smoothing_power must be in (0, 1], got {smoothing_power}")
    if not vocab.has_counts():
        raise CorpusError("vocabulary has no counts; cannot build a negative table")
    weights = vocab.counts.astype(np.float64) ** smoothing_power
    probs = weights / weights.sum()
    return NegativeTable(cumulative=np.cumsum(probs), smoothing_power=smoothing_power)


def sample_negatives(table: NegativeTable, k: int, exclude: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Draw ``k`` ids from the noise distribution, redrawing any equal to ``exclude``."""
    if k < 1:
        raise CorpusError(f"k must be >= 1, got {k}")
    if len(table) < 2:
        raise CorpusError("negative sampling needs a vocabulary of size >= 2")
    draws = np.searchsorted(table.cumulative, rng.random(k), side="right")
    while True:
        clash = draws == exclude
        n_clash = int(clash.sum())
        if n_clash == 0:
            return draws
        draws[clash] = np.searchsorted(table.cumulative, rng.random(n_clash), side="right")


@dataclass
class EncodedCorpus:
    """In-memory corpus as position-preserving id arrays (-1 marks OOV)."""

    sentences: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)


def encode_corpus(pairs: Iterable[SentencePair], vocab: Vocabulary) -> EncodedCorpus:
    encoded = EncodedCorpus()
    for pair in pairs:
        encoded.sentences.append(
            (vocab.encode_aligned(pair.src_tokens), vocab.encode_aligned(pair.tgt_tokens))
        )
    if not encoded.sentences:
        raise CorpusError("corpus is empty after dropping unusable sentence pairs")
    return encoded


def subsample_keep_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray | None:
    """Word2Vec-style keep probabilities ``min(1, sqrt(t / f))``; None when off."""
    if threshold <= 0.0:
        return None
    if not vocab.has_counts():
        raise CorpusError("vocabulary has no counts; cannot subsample")
    frequency = vocab.counts.astype(np.float64) / vocab.total_tokens
    return np.minimum(1.0, np.sqrt(threshold / frequency))


def _kept_ids(ids: np.ndarray, keep_prob: np.ndarray | None,
              rng: np.random.Generator) -> np.ndarray:
    kept = ids[ids >= 0]
    if keep_prob is None or len(kept) == 0:
        return kept
    return kept[rng.random(len(kept)) < keep_prob[kept]]


def training_pair_stream(corpus: EncodedCorpus, window: int, rng: np.random.Generator,
                         keep_prob: np.ndarray | None = None) -> Iterator[TrainingPair]:
    """One epoch of interleaved pairs: per sentence pair, monolingual source
    pairs, monolingual target pairs, then the index-aligned cross-lingual pairs.

    Frequent-word subsampling (when enabled) thins the monolingual token
    streams only; index alignment must keep its positions.
    """
    for src_ids, tgt_ids in corpus.sentences:
        yield from skipgram_pairs(_kept_ids(src_ids, keep_prob, rng), window, rng)
        yield from skipgram_pairs(_kept_ids(tgt_ids, keep_prob, rng), window, rng)
        yield from _aligned_id_pairs(src_ids, tgt_ids)


@lru_cache(maxsize=None)
def _expected_skipgram_pairs(length: int, window: int) -> float:
    """Expected pair count for one sentence under the dynamic window."""
    if length < 2:
        return 0.0
    total = 0.0
    for i in range(length):
        for b in range(1, window + 1):
            total += min(i, b) + min(length - 1 - i, b)
    return total / window


def expected_pairs_per_epoch(corpus: EncodedCorpus, window: int) -> float:
    """Expected stream length for one epoch; the lr-decay horizon uses this.

    Cross-lingual pair counts are deterministic; skip-gram counts are averaged
    over the window-span draws. Subsampling, when enabled, is ignored here
    (decay then reaches its floor slightly later than the stream ends).
    """
    total = 0.0
    for src_ids, tgt_ids in corpus.sentences:
        total += _expected_skipgram_pairs(int((src_ids >= 0).sum()), window)
        total += _expected_skipgram_pairs(int((tgt_ids >= 0).sum()), window)
        n = min(len(src_ids), len(tgt_ids))
        total += 2.0 * int(np.sum((src_ids[:n] >= 0) & (tgt_ids[:n] >= 0)))
    return total
