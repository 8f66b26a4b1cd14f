"""Text persistence for embeddings, metadata sidecars, and checkpoints.

An embedding file is word2vec-style text: a ``"V dim"`` header, then one
``"word c1 ... c_dim"`` line per word in id order. Coordinates are written
with 17 significant digits so doubles round-trip exactly, which makes
save -> load -> save byte-identical. Two companions sit next to it:

* ``<path>.meta``  - flat ``"key = value"`` sidecar with every setting of the
  run (nothing is left to unrecorded defaults);
* ``<path>.vocab`` - ``"word<TAB>count"`` dump so corpus frequencies survive
  a round trip (count-based reports need them).

Checkpoints reuse the same layout with extra sections for the context
matrix, biases, and optimizer progress, so training state is inspectable
with a pager like everything else.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Vocabulary, read_vocab_dump, write_vocab_dump
from .errors import HypervecError
from .model import GEOMETRIES, POINCARE, ParameterStore, TrainStats

META_SUFFIX = ".meta"
VOCAB_SUFFIX = ".vocab"


class PersistenceError(HypervecError, ValueError):
    """Malformed or inconsistent embedding/checkpoint file."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _meta_path(path) -> Path:
    return Path(str(path) + META_SUFFIX)


def _vocab_path(path) -> Path:
    return Path(str(path) + VOCAB_SUFFIX)


def write_metadata(metadata: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as out:
        for key in sorted(metadata):
            out.write(f"{key} = {metadata[key]}\n")


def read_metadata(path) -> dict:
    if not Path(path).exists():
        raise PersistenceError(f"missing metadata sidecar: {path}")
    metadata = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition(" = ")
            if not sep:
                raise PersistenceError(f"{path}:{lineno}: expected 'key = value'")
            metadata[key.strip()] = value.rstrip("\n")
    return metadata


def _write_matrix_rows(out, words, matrix) -> None:
    for word, row in zip(words, matrix):
        out.write(word + " " + " ".join(_fmt(c) for c in row) + "\n")


def save_embeddings(store: ParameterStore, vocab: Vocabulary, metadata: dict,
                    path) -> None:
    """Write the published (target) vectors plus sidecar and vocab dump."""
    if "geometry" not in metadata or "dim" not in metadata:
        raise PersistenceError("metadata must record at least 'geometry' and 'dim'")
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"{len(vocab)} {store.dim}\n")
        _write_matrix_rows(out, vocab.id_to_word, store.target_vectors)
    write_metadata(metadata, _meta_path(path))
    if vocab.has_counts():
        write_vocab_dump(vocab, _vocab_path(path))


def _parse_header(line: str, path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise PersistenceError(f"{path}:1: header must be 'V dim'")
    try:
        n_words, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise PersistenceError(f"{path}:1: header must hold two integers") from None
    if n_words < 1 or dim < 1:
        raise PersistenceError(f"{path}:1: header counts must be positive")
    return n_words, dim


def _parse_vector_line(line: str, dim: int, path, lineno: int) -> tuple[str, np.ndarray]:
    parts = line.split()
    if len(parts) != dim + 1:
        raise PersistenceError(
            f"{path}:{lineno}: expected a word and {dim} coordinates, got "
            f"{len(parts)} fields"
        )
    try:
        row = np.array([float(p) for p in parts[1:]], dtype=np.float64)
    except ValueError:
        raise PersistenceError(f"{path}:{lineno}: non-numeric coordinate") from None
    if not np.all(np.isfinite(row)):
        raise PersistenceError(f"{path}:{lineno}: non-finite coordinate")
    return parts[0], row


def _read_section_rows(lines, start, count, dim, path):
    words = []
    matrix = np.empty((count, dim))
    for offset in range(count):
        lineno = start + offset
        if lineno > len(lines):
            raise PersistenceError(
                f"{path}:{lineno}: file ends early, expected {count} rows in section"
            )
        word, row = _parse_vector_line(lines[lineno - 1], dim, path, lineno)
        words.append(word)
        matrix[offset] = row
    return words, matrix, start + count


def _validate_ball_rows(words, matrix, path) -> None:
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.where(norms >= 1.0)[0]
    if len(bad):
        word = words[int(bad[0])]
        raise PersistenceError(
            f"{path}: row for word {word!r} has norm {norms[bad[0]]:.6f} >= 1, "
            f"not a valid poincare point"
        )


def _vocab_from_words(words, path) -> Vocabulary:
    counts = np.zeros(len(words), dtype=np.int64)
    vocab_path = _vocab_path(path)
    if vocab_path.exists():
        dumped = read_vocab_dump(vocab_path)
        counts = np.array([dumped.get(w, 0) for w in words], dtype=np.int64)
    return Vocabulary(
        word_to_id={w: i for i, w in enumerate(words)},
        id_to_word=list(words),
        counts=counts,
        total_tokens=int(counts.sum()),
        min_count=1,
    )


def load_embeddings(path) -> tuple[ParameterStore, Vocabulary, dict]:
    """Read an embedding file back into a store view, vocabulary, and metadata.

    Validates header counts, coordinate parses, the ball invariant for
    poincare files, and the presence of the metadata sidecar; failures name
    the offending line.
    """
    metadata = read_metadata(_meta_path(path))
    geometry = metadata.get("geometry")
    if geometry not in GEOMETRIES:
        raise PersistenceError(
            f"{_meta_path(path)}: metadata geometry must be one of {GEOMETRIES}, "
            f"got {geometry!r}"
        )
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise PersistenceError(f"cannot read embedding file {path}: {exc}") from exc
    if not lines:
        raise PersistenceError(f"{path}:1: empty file")
    n_words, dim = _parse_header(lines[0], path)
    words, matrix, next_line = _read_section_rows(lines, 2, n_words, dim, path)
    if next_line <= len(lines):
        raise PersistenceError(
            f"{path}:{next_line}: trailing content after {n_words} vector rows"
        )
    if len(set(words)) != len(words):
        raise PersistenceError(f"{path}: duplicate word in vector rows")
    if "dim" in metadata and int(metadata["dim"]) != dim:
        raise PersistenceError(
            f"{path}: header dim {dim} contradicts sidecar dim {metadata['dim']}"
        )
    if geometry == POINCARE:
        _validate_ball_rows(words, matrix, path)
    store = ParameterStore(
        geometry=geometry,
        target_vectors=matrix,
        context_vectors=np.zeros_like(matrix),
    )
    return store, _vocab_from_words(words, path), metadata


def save_checkpoint(store: ParameterStore, vocab: Vocabulary, metadata: dict,
                    stats: TrainStats, path) -> None:
    """Embedding format plus context/bias sections and optimizer progress."""
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"{len(vocab)} {store.dim}\n")
        _write_matrix_rows(out, vocab.id_to_word, store.target_vectors)
        out.write("#context\n")
        _write_matrix_rows(out, vocab.id_to_word, store.context_vectors)
        if store.context_bias is not None:
            out.write("#context_bias\n")
            for word, value in zip(vocab.id_to_word, store.context_bias):
                out.write(f"{word} {_fmt(value)}\n")
        if store.target_bias is not None:
            out.write("#target_bias\n")
            for word, value in zip(vocab.id_to_word, store.target_bias):
                out.write(f"{word} {_fmt(value)}\n")
        out.write("#state\n")
        out.write(f"epoch {stats.epoch}\n")
        out.write(f"pairs_processed {stats.pairs_processed}\n")
        out.write(f"skipped_singular {stats.skipped_singular}\n")
        out.write(f"mean_loss {_fmt(stats.mean_loss)}\n")
    write_metadata(metadata, _meta_path(path))
    if vocab.has_counts():
        write_vocab_dump(vocab, _vocab_path(path))


def _expect_marker(lines, lineno, marker, path) -> int:
    if lineno > len(lines) or lines[lineno - 1].strip() != marker:
        found = lines[lineno - 1].strip() if lineno <= len(lines) else "<eof>"
        raise PersistenceError(f"{path}:{lineno}: expected {marker!r}, found {found!r}")
    return lineno + 1


def load_checkpoint(path) -> tuple[ParameterStore, Vocabulary, dict, TrainStats]:
    """Restore full training state (both matrices, biases, progress counters)."""
    metadata = read_metadata(_meta_path(path))
    geometry = metadata.get("geometry")
    if geometry not in GEOMETRIES:
        raise PersistenceError(f"{_meta_path(path)}: bad or missing geometry")
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise PersistenceError(f"{path}:1: empty file")
    n_words, dim = _parse_header(lines[0], path)
    words, target, cursor = _read_section_rows(lines, 2, n_words, dim, path)
    cursor = _expect_marker(lines, cursor, "#context", path)
    ctx_words, context, cursor = _read_section_rows(lines, cursor, n_words, dim, path)
    if ctx_words != words:
        raise PersistenceError(f"{path}: context section words differ from targets")
    context_bias = None
    target_bias = None
    while cursor <= len(lines) and lines[cursor - 1].strip() != "#state":
        marker = lines[cursor - 1].strip()
        if marker not in ("#context_bias", "#target_bias"):
            raise PersistenceError(f"{path}:{cursor}: unexpected section {marker!r}")
        cursor += 1
        bias_words, column, cursor = _read_section_rows(lines, cursor, n_words, 1, path)
        if bias_words != words:
            raise PersistenceError(f"{path}: bias section words differ from targets")
        if marker == "#context_bias":
            context_bias = column.ravel()
        else:
            target_bias = column.ravel()
    cursor = _expect_marker(lines, cursor, "#state", path)
    stats = TrainStats()
    for lineno in range(cursor, len(lines) + 1):
        key, _, value = lines[lineno - 1].partition(" ")
        try:
            if key == "epoch":
                stats.epoch = int(value)
            elif key == "pairs_processed":
                stats.pairs_processed = int(value)
            elif key == "skipped_singular":
                stats.skipped_singular = int(value)
            elif key == "mean_loss":
                stats.mean_loss = float(value)
            else:
                raise PersistenceError(f"{path}:{lineno}: unknown state key {key!r}")
        except ValueError:
            raise PersistenceError(f"{path}:{lineno}: bad state value") from None
    if geometry == POINCARE:
        _validate_ball_rows(words, target, path)
        _validate_ball_rows(words, context, path)
    store = ParameterStore(
        geometry=geometry, target_vectors=target, context_vectors=context,
        context_bias=context_bias, target_bias=target_bias,
    )
    return store, _vocab_from_words(words, path), metadata, stats
