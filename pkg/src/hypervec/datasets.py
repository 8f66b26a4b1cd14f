"""Parsers for the evaluation datasets (graded hypernymy and analogy files).

Both parsers reject malformed lines with their line number rather than
repairing them. Words are lowercased to match the corpus tokenization.
"""

from __future__ import annotations

from pathlib import Path

from .errors import HypervecError
from .evaluation import AnalogyQuery, HyperLexRecord

DEFAULT_SCORE_COLUMN = "AVG_SCORE_0_10"


class DatasetError(HypervecError, ValueError):
    """Malformed evaluation dataset file."""


def parse_hyperlex_file(path, score_column: str = DEFAULT_SCORE_COLUMN) -> list[HyperLexRecord]:
    """Read a graded hypernymy file: header with named columns, then data rows.

    The header must name WORD1, WORD2 and the requested score column;
    anything else in it is carried but ignored.
    """
    lines = _read_lines(path)
    if not lines:
        raise DatasetError(f"{path}:1: empty file")
    header = lines[0].split()
    try:
        col_u = header.index("WORD1")
        col_v = header.index("WORD2")
        col_score = header.index(score_column)
    except ValueError:
        raise DatasetError(
            f"{path}:1: header must name WORD1, WORD2 and {score_column!r}; "
            f"available columns: {', '.join(header)}"
        ) from None
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if not fields:
            raise DatasetError(f"{path}:{lineno}: blank data line")
        if len(fields) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}"
            )
        try:
            score = float(fields[col_score])
        except ValueError:
            raise DatasetError(
                f"{path}:{lineno}: score {fields[col_score]!r} is not a number"
            ) from None
        records.append(
            HyperLexRecord(fields[col_u].lower(), fields[col_v].lower(), score)
        )
    return records


def parse_analogy_file(path) -> list[AnalogyQuery]:
    """Read 4-word analogy lines; ``:``-prefixed section headers are skipped."""
    queries = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if line.startswith(":"):
            continue
        words = line.split()
        if len(words) != 4:
            raise DatasetError(
                f"{path}:{lineno}: expected 4 words per analogy line, got {len(words)}"
            )
        queries.append(AnalogyQuery(*(w.lower() for w in words)))
    return queries


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: invalid UTF-8 ({exc})") from exc
