"""Evaluation suite: graded hypernymy, cross-lingual analogy, and norm structure.

Hypernymy scoring uses the norm-weighted negative distance

    is_a(u, v) = -(1 + alpha * (||v|| - ||u||)) * d(u, v)

which rewards pairs where the candidate hypernym ``v`` sits closer to the
origin (more general) than ``u``. Analogy uses 3CosAdd over the embedding
coordinates treated as plain vectors, which applies to both geometries.

Dataset records containing out-of-vocabulary words are skipped and counted;
every report satisfies ``evaluated + skipped_oov == dataset size``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .corpus import OutOfVocabularyError, Vocabulary
from .errors import HypervecError
from .model import POINCARE, ParameterStore

DEFAULT_ALPHA = 1000.0  # convention of the scoring rule this follows


class EvaluationError(HypervecError, ValueError):
    """Evaluation cannot produce a well-defined result."""


class UndefinedCorrelationError(EvaluationError):
    """Rank correlation is undefined (zero rank variance on one side)."""


@dataclass
class HyperLexRecord:
    word_u: str
    word_v: str
    gold_score: float


@dataclass
class AnalogyQuery:
    w1: str
    w2: str
    w3: str
    w4_gold: str


@dataclass
class EvalReport:
    """Task outcome plus the bookkeeping the OOV rule requires."""

    task: str
    metric: float
    evaluated: int
    skipped_oov: int
    extras: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"task: {self.task}",
            f"metric: {self.metric:.6f}",
            f"evaluated: {self.evaluated}",
            f"skipped_oov: {self.skipped_oov}",
        ]
        lines += [f"{key}: {self.extras[key]}" for key in sorted(self.extras)]
        return "\n".join(lines)

    def to_record(self) -> str:
        """Single-line machine-readable key=value record."""
        parts = [
            f"task={self.task}",
            f"metric={self.metric:.17g}",
            f"evaluated={self.evaluated}",
            f"skipped_oov={self.skipped_oov}",
        ]
        parts += [f"{key}={self.extras[key]}" for key in sorted(self.extras)]
        return " ".join(parts)


def average_ranks(values) -> np.ndarray:
    """Ranks 1..n with tied values assigned the mean of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Pearson correlation of average-tie-adjusted ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise EvaluationError("spearman needs two equally long 1-d sequences")
    if len(xs) < 2:
        raise EvaluationError("spearman needs at least 2 observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        raise UndefinedCorrelationError("constant ranks on one side")
    return float(np.sum(rx * ry) / denom)


def is_a_score(u, v, alpha: float) -> float:
    """Norm-weighted negative distance; asymmetric in (u, v) for alpha > 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = geometry.poincare_distance(u, v)
    weight = 1.0 + alpha * (np.linalg.norm(v) - np.linalg.norm(u))
    return float(-weight * d)


def _require_poincare(store: ParameterStore, operation: str) -> None:
    if store.geometry != POINCARE:
        raise EvaluationError(
            f"{operation} requires a poincare-geometry store: norm-as-specificity "
            f"does not hold in the {store.geometry} model"
        )


def eval_hyperlex(records, store: ParameterStore, vocab: Vocabulary,
                  alpha: float = DEFAULT_ALPHA) -> EvalReport:
    """Spearman correlation between gold is-a ratings and predicted scores."""
    _require_poincare(store, "hypernymy evaluation")
    golds = []
    preds = []
    skipped = 0
    for record in records:
        iu = vocab.get(record.word_u)
        iv = vocab.get(record.word_v)
        if iu is None or iv is None:
            skipped += 1
            continue
        golds.append(record.gold_score)
        preds.append(is_a_score(store.target_vectors[iu], store.target_vectors[iv], alpha))
    if len(golds) < 2:
        raise EvaluationError(
            f"hypernymy evaluation needs >= 2 in-vocabulary pairs "
            f"(evaluable={len(golds)}, skipped_oov={skipped})"
        )
    rho = spearman(golds, preds)
    return EvalReport(
        task="hyperlex", metric=rho, evaluated=len(golds), skipped_oov=skipped,
        extras={"alpha": alpha, "geometry": store.geometry, "dim": store.dim},
    )


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise EvaluationError("cosine similarity is undefined for a zero vector")
    return float(a @ b / (na * nb))


def _cosine_to_all(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine of every row against the query; zero rows map to -inf."""
    qn = np.linalg.norm(query)
    if qn == 0.0:
        raise EvaluationError("cosine similarity is undefined for a zero vector")
    norms = np.linalg.norm(matrix, axis=1)
    sims = np.full(len(matrix), -np.inf)
    ok = norms > 0.0
    sims[ok] = matrix[ok] @ query / (norms[ok] * qn)
    return sims


def analogy_predict(w1: str, w2: str, w3: str, store: ParameterStore,
                    vocab: Vocabulary) -> str:
    """3CosAdd: the word maximizing cosine to v(w2) - v(w1) + v(w3).

    Query words are excluded from the candidates; ties resolve to the lower
    word id. Cosine over raw coordinates is used for both geometries.
    """
    ids = [vocab.id_of(w) for w in (w1, w2, w3)]
    vectors = store.target_vectors
    query = vectors[ids[1]] - vectors[ids[0]] + vectors[ids[2]]
    sims = _cosine_to_all(vectors, query)
    sims[ids] = -np.inf
    best = int(np.argmax(sims))  # first maximum = lowest id on ties
    if not np.isfinite(sims[best]):
        raise EvaluationError("no candidate word has a usable (non-zero) vector")
    return vocab.id_to_word[best]


def eval_analogy(queries, store: ParameterStore, vocab: Vocabulary) -> EvalReport:
    """Exact-match accuracy of 3CosAdd predictions against the gold fourth word."""
    evaluated = 0
    correct = 0
    skipped = 0
    for query in queries:
        words = (query.w1, query.w2, query.w3, query.w4_gold)
        if any(w not in vocab for w in words):
            skipped += 1
            continue
        predicted = analogy_predict(query.w1, query.w2, query.w3, store, vocab)
        evaluated += 1
        correct += int(predicted == query.w4_gold)
    if evaluated == 0:
        raise EvaluationError(
            f"analogy evaluation has no evaluable queries (skipped_oov={skipped})"
        )
    return EvalReport(
        task="analogy", metric=correct / evaluated, evaluated=evaluated,
        skipped_oov=skipped,
        extras={"correct": correct, "geometry": store.geometry, "dim": store.dim},
    )


def closest_children(word: str, k: int, store: ParameterStore,
                     vocab: Vocabulary) -> list[str]:
    """Nearest neighbors that sit farther from the origin than the query.

    Among the ``max(5k, 100)`` nearest words by hyperbolic distance, keep
    those with strictly larger Euclidean norm (more specific), ordered by
    increasing distance, up to ``k``.
    """
    _require_poincare(store, "closest-children query")
    if k < 1:
        raise EvaluationError(f"k must be >= 1, got {k}")
    qid = vocab.id_of(word)
    vectors = store.target_vectors
    distances = geometry.poincare_distance(vectors[qid], vectors)
    distances[qid] = np.inf
    pool = np.argsort(distances, kind="stable")[: max(5 * k, 100)]
    pool = pool[np.isfinite(distances[pool])]
    query_norm = np.linalg.norm(vectors[qid])
    norms = np.linalg.norm(vectors[pool], axis=1)
    children = pool[norms > query_norm][:k]
    return [vocab.id_to_word[int(i)] for i in children]


def nearest_neighbors(word: str, k: int, store: ParameterStore,
                      vocab: Vocabulary) -> list[tuple[str, float]]:
    """Top-k neighbors: by hyperbolic distance in the ball (ascending), by
    cosine similarity in the Euclidean model (descending)."""
    if k < 1:
        raise EvaluationError(f"k must be >= 1, got {k}")
    qid = vocab.id_of(word)
    vectors = store.target_vectors
    if store.geometry == POINCARE:
        scores = geometry.poincare_distance(vectors[qid], vectors)
        scores[qid] = np.inf
        order = np.argsort(scores, kind="stable")[:k]
    else:
        scores = _cosine_to_all(vectors, vectors[qid])
        scores[qid] = -np.inf
        order = np.argsort(-scores, kind="stable")[:k]
    return [(vocab.id_to_word[int(i)], float(scores[int(i)])) for i in order
            if np.isfinite(scores[int(i)])]


def norm_frequency_correlation(store: ParameterStore, vocab: Vocabulary) -> float:
    """Spearman between inverse corpus frequency and embedding norm.

    High correlation means frequent (general) words stay near the origin
    while rare (specific) words drift outward.
    """
    if len(vocab) < 2:
        raise EvaluationError("norm/frequency correlation needs a vocabulary of >= 2 words")
    if not vocab.has_counts():
        raise EvaluationError(
            "vocabulary has no corpus counts (was the embedding file saved without "
            "its .vocab dump?)"
        )
    inverse_freq = 1.0 / vocab.counts.astype(np.float64)
    norms = np.linalg.norm(store.target_vectors, axis=1)
    return spearman(inverse_freq, norms)
