"""Skip-gram negative sampling in two geometries, and the training loop.

The score of a (target, context) pair is ``dot(u, v)`` in the Euclidean
model and ``-h(d(u, v))`` in the Poincare model, where ``h(d) = cosh^2(d)``
steepens the hyperbolic distance inside the objective; an optional scalar
bias on the context word is added in both cases. Training minimizes the
negative log likelihood

    L = -log sigma(s(u, v)) - sum_neg log sigma(-s(u, v'))

by plain SGD in the Euclidean model and by Riemannian SGD in the ball:
ambient gradients are rescaled by the inverse metric and the update follows
the exponential map (or a first-order projected step, for comparison).

Parallel training is lock-free: workers share the parameter matrices and
apply unsynchronized read-modify-write row updates, tolerating lost updates
in the sparse-update regime. Only single-worker runs are bit-reproducible.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .corpus import (
    CorpusError,
    EncodedCorpus,
    NegativeTable,
    Vocabulary,
    build_negative_table,
    expected_pairs_per_epoch,
    sample_negatives,
    subsample_keep_probabilities,
    training_pair_stream,
)
from .errors import HypervecError
from .geometry import BALL_EPSILON, SingularGradientError

logger = logging.getLogger(__name__)

EUCLIDEAN = "euclidean"
POINCARE = "poincare"
GEOMETRIES = (EUCLIDEAN, POINCARE)
RETRACTIONS = ("exp_map", "first_order")

# Geometry-specific starting learning rates (word2vec lineage for the
# Euclidean model; the ball tolerates a larger step near the origin).
DEFAULT_LEARNING_RATE = {EUCLIDEAN: 0.025, POINCARE: 0.05}

_EMA_WEIGHT = 0.01


class ConfigError(HypervecError, ValueError):
    """Invalid training configuration."""


class NumericalError(HypervecError, FloatingPointError):
    """A parameter update produced non-finite values; training aborts."""


@dataclass
class ModelConfig:
    geometry: str = POINCARE
    dim: int = 100
    use_bias: bool = False
    target_bias: bool = False
    negatives_per_pair: int = 5
    learning_rate: float | None = None
    lr_min: float | None = None
    epochs: int = 5
    seed: int = 1
    ball_epsilon: float = BALL_EPSILON
    retraction: str = "exp_map"
    init_radius: float = 0.001

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        if self.retraction not in RETRACTIONS:
            raise ConfigError(f"retraction must be one of {RETRACTIONS}, got {self.retraction!r}")
        if self.learning_rate is None:
            self.learning_rate = DEFAULT_LEARNING_RATE[self.geometry]
        if self.lr_min is None:
            self.lr_min = 1e-4 * self.learning_rate
        if self.dim < 2:
            raise ConfigError(f"dim must be >= 2, got {self.dim}")
        # epochs = 0 is legal and returns the untouched initialization.
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.negatives_per_pair < 1:
            raise ConfigError(f"negatives_per_pair must be >= 1, got {self.negatives_per_pair}")
        if self.learning_rate <= 0 or self.lr_min <= 0:
            raise ConfigError("learning rates must be positive")
        if self.lr_min > self.learning_rate:
            raise ConfigError(
                f"lr_min ({self.lr_min}) must not exceed learning_rate ({self.learning_rate})"
            )
        if not 0.0 < self.ball_epsilon < 1.0:
            raise ConfigError(f"ball_epsilon must be in (0, 1), got {self.ball_epsilon}")
        if self.target_bias and not self.use_bias:
            raise ConfigError("target_bias requires use_bias")
        if self.init_radius <= 0 or self.init_radius >= 1:
            raise ConfigError(f"init_radius must be in (0, 1), got {self.init_radius}")


@dataclass
class ParameterStore:
    """Trainable state: target matrix, context matrix, optional biases.

    The target vectors are the published embeddings; context vectors are kept
    for checkpoint resumption. In the Poincare model every row of both
    matrices stays strictly inside the unit ball.
    """

    geometry: str
    target_vectors: np.ndarray
    context_vectors: np.ndarray
    context_bias: np.ndarray | None = None
    target_bias: np.ndarray | None = None

    def __len__(self) -> int:
        return self.target_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.target_vectors.shape[1]

    def copy(self) -> "ParameterStore":
        return ParameterStore(
            geometry=self.geometry,
            target_vectors=self.target_vectors.copy(),
            context_vectors=self.context_vectors.copy(),
            context_bias=None if self.context_bias is None else self.context_bias.copy(),
            target_bias=None if self.target_bias is None else self.target_bias.copy(),
        )


@dataclass
class TrainStats:
    pairs_processed: int = 0
    mean_loss: float = float("nan")  # exponential moving average
    epoch: int = 0
    skipped_singular: int = 0
    epoch_losses: list[float] = field(default_factory=list)
    lr_samples: list[tuple[int, float]] = field(default_factory=list)


def init_parameters(vocab: Vocabulary, config: ModelConfig,
                    rng: np.random.Generator) -> ParameterStore:
    """Fresh parameters: word2vec-style uniform init in the Euclidean model,
    near-origin random directions in the ball (norms grow with specificity
    during training, so they start small)."""
    n = len(vocab)
    dim = config.dim
    if config.geometry == EUCLIDEAN:
        target = rng.uniform(-0.5 / dim, 0.5 / dim, size=(n, dim))
        context = np.zeros((n, dim))
    else:
        target = _random_ball_init(rng, n, dim, config.init_radius)
        context = _random_ball_init(rng, n, dim, config.init_radius)
    return ParameterStore(
        geometry=config.geometry,
        target_vectors=target,
        context_vectors=context,
        context_bias=np.zeros(n) if config.use_bias else None,
        target_bias=np.zeros(n) if config.target_bias else None,
    )


def _random_ball_init(rng, n, dim, radius):
    direction = rng.normal(size=(n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * rng.uniform(0.0, radius, size=(n, 1))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def score_pair(u, v, bias_v: float, config: ModelConfig) -> float:
    """Model score of one (target, context) pair: dot product or -h(distance),
    plus the context bias when enabled. Geometry domain errors propagate."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if config.geometry == EUCLIDEAN:
        score = float(u @ v)
    else:
        value, _ = geometry.h_apply(geometry.poincare_distance(u, v))
        score = -float(value)
    if config.use_bias:
        score += bias_v
    return score


def _forward_scores(u, ctx_rows, bias_vals, config):
    """Scores of u against a block of context rows; saturated h is clamped flat."""
    if config.geometry == EUCLIDEAN:
        scores = ctx_rows @ u
        h_deriv = None
    else:
        d = geometry.poincare_distance(u, ctx_rows)
        h_val, h_deriv = geometry.h_apply_clamped(d)
        scores = -h_val
    if bias_vals is not None:
        scores = scores + bias_vals
    return scores, h_deriv


def _nll(scores: np.ndarray) -> float:
    """-log sigma(s_pos) - sum log sigma(-s_neg); first score is the positive."""
    loss = np.logaddexp(0.0, -scores[0]) + np.sum(np.logaddexp(0.0, scores[1:]))
    return float(loss)


def _gather(store: ParameterStore, center: int, ctx_ids: np.ndarray, config: ModelConfig):
    u = store.target_vectors[center]
    ctx_rows = store.context_vectors[ctx_ids]
    bias_vals = None
    if config.use_bias:
        bias_vals = store.context_bias[ctx_ids].copy()
        if config.target_bias:
            bias_vals += store.target_bias[center]
    return u, ctx_rows, bias_vals


def sgns_loss(center: int, context: int, negatives, store: ParameterStore,
              config: ModelConfig) -> float:
    """Negative log likelihood of one positive pair against its negatives."""
    ctx_ids = np.concatenate(([context], np.asarray(negatives, dtype=np.int64)))
    u, ctx_rows, bias_vals = _gather(store, center, ctx_ids, config)
    scores, _ = _forward_scores(u, ctx_rows, bias_vals, config)
    return _nll(scores)


@dataclass
class PairGradients:
    """Ambient-space gradients for every row and bias a sample touches.

    Context rows are aggregated by id (negative draws may repeat), so each
    id appears once with the summed gradient.
    """

    loss: float
    target_id: int
    target_grad: np.ndarray
    context_ids: np.ndarray
    context_grads: np.ndarray
    bias_grads: np.ndarray | None = None
    target_bias_grad: float | None = None


def sgns_gradients(center: int, context: int, negatives, store: ParameterStore,
                   config: ModelConfig) -> PairGradients:
    """Loss and ambient partial derivatives for one training sample.

    In the Poincare model the chain rule runs through the logistic term, the
    h transform's derivative, and the closed-form distance gradient; a
    (near-)coincident pair raises :class:`SingularGradientError` and the
    caller skips the sample.
    """
    ctx_ids = np.concatenate(([context], np.asarray(negatives, dtype=np.int64)))
    u, ctx_rows, bias_vals = _gather(store, center, ctx_ids, config)

    if config.geometry == EUCLIDEAN:
        scores = ctx_rows @ u
        if bias_vals is not None:
            scores = scores + bias_vals
        g = _sigmoid(scores)
        g[0] -= 1.0  # dL/ds: sigma(s) - 1 for the positive, sigma(s) for negatives
        grad_u = g @ ctx_rows
        grad_ctx = g[:, None] * u[None, :]
    else:
        d, grad_d_u, grad_d_ctx = geometry._distance_and_gradients(u, ctx_rows)
        h_val, h_deriv = geometry.h_apply_clamped(d)
        scores = -h_val
        if bias_vals is not None:
            scores = scores + bias_vals
        g = _sigmoid(scores)
        g[0] -= 1.0
        coeff = -g * h_deriv  # ds/dd = -h'(d)
        grad_u = coeff @ grad_d_u
        grad_ctx = coeff[:, None] * grad_d_ctx

    # negative draws may repeat an id; aggregate so each row updates once
    id_list = ctx_ids.tolist()
    if len(set(id_list)) == len(id_list):
        unique_ids, agg_ctx = ctx_ids, grad_ctx
        bias_grads = g if config.use_bias else None
    else:
        unique_ids, inverse = np.unique(ctx_ids, return_inverse=True)
        agg_ctx = np.zeros((len(unique_ids), store.dim))
        np.add.at(agg_ctx, inverse, grad_ctx)
        bias_grads = None
        if config.use_bias:
            bias_grads = np.zeros(len(unique_ids))
            np.add.at(bias_grads, inverse, g)
    return PairGradients(
        loss=_nll(scores),
        target_id=center,
        target_grad=grad_u,
        context_ids=unique_ids,
        context_grads=agg_ctx,
        bias_grads=bias_grads,
        target_bias_grad=float(g.sum()) if config.target_bias else None,
    )


def sgd_step(rows: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
    """Plain gradient step ``row - lr * grad`` (Euclidean parameters and biases)."""
    updated = rows - lr * grads
    if not np.all(np.isfinite(updated)):
        raise NumericalError("SGD update produced non-finite values")
    return updated


def rsgd_step(rows: np.ndarray, grads: np.ndarray, lr: float,
              config: ModelConfig) -> np.ndarray:
    """Riemannian step: rescale by the inverse metric, then retract.

    The full variant follows the exponential map; the first-order variant
    takes the ambient step and projects back into the ball.
    """
    updated = geometry._fused_rsgd(
        np.asarray(rows, dtype=np.float64), np.asarray(grads, dtype=np.float64),
        lr, config.ball_epsilon, config.retraction == "exp_map")
    if not np.isfinite(updated).all():
        raise NumericalError("Riemannian update produced non-finite values")
    return updated


def linear_lr(lr0: float, lr_min: float, t: int | float, total: float) -> float:
    """Learning rate at stream position t: max(lr_min, lr0 * (1 - t / total))."""
    if total <= 0:
        return lr_min
    return max(lr_min, lr0 * (1.0 - t / total))


class _Clock:
    """Shared pair counter; hogwild increments race and that is tolerated."""

    __slots__ = ("value",)

    def __init__(self):
        self.value = 0


def _apply_gradients(store: ParameterStore, grads: PairGradients, lr: float,
                     config: ModelConfig) -> None:
    try:
        if config.geometry == EUCLIDEAN:
            store.target_vectors[grads.target_id] = sgd_step(
                store.target_vectors[grads.target_id], grads.target_grad, lr)
            store.context_vectors[grads.context_ids] = sgd_step(
                store.context_vectors[grads.context_ids], grads.context_grads, lr)
        else:
            # one stacked retraction for the target row plus all context rows
            rows = np.concatenate((store.target_vectors[grads.target_id][None, :],
                                   store.context_vectors[grads.context_ids]))
            row_grads = np.concatenate((grads.target_grad[None, :], grads.context_grads))
            updated = rsgd_step(rows, row_grads, lr, config)
            store.target_vectors[grads.target_id] = updated[0]
            store.context_vectors[grads.context_ids] = updated[1:]
        if grads.bias_grads is not None:
            store.context_bias[grads.context_ids] = sgd_step(
                store.context_bias[grads.context_ids], grads.bias_grads, lr)
        if grads.target_bias_grad is not None:
            store.target_bias[grads.target_id] = sgd_step(
                store.target_bias[grads.target_id], grads.target_bias_grad, lr)
    except (NumericalError, geometry.GeometryError) as exc:
        logger.error("aborting: bad update at sample (center=%d, context ids=%s): %s",
                     grads.target_id, grads.context_ids, exc)
        raise NumericalError(
            f"non-finite update at sample center={grads.target_id}: {exc}"
        ) from exc


def _epoch_pass(store, config, sentences, window, keep_prob, table, clock,
                total_pairs, pair_rng, neg_rng, ema_start):
    """One pass over a block of sentences; returns (loss_sum, n, skipped, ema)."""
    corpus_view = EncodedCorpus(sentences)
    loss_sum = 0.0
    n = 0
    skipped = 0
    ema = ema_start
    k = config.negatives_per_pair
    for pair in training_pair_stream(corpus_view, window, pair_rng, keep_prob):
        lr = linear_lr(config.learning_rate, config.lr_min, clock.value, total_pairs)
        clock.value += 1
        negatives = sample_negatives(table, k, exclude=pair.context, rng=neg_rng)
        try:
            grads = sgns_gradients(pair.center, pair.context, negatives, store, config)
        except SingularGradientError:
            skipped += 1
            continue
        _apply_gradients(store, grads, lr, config)
        loss_sum += grads.loss
        n += 1
        ema = grads.loss if np.isnan(ema) else (1 - _EMA_WEIGHT) * ema + _EMA_WEIGHT * grads.loss
    return loss_sum, n, skipped, ema


def train(corpus: EncodedCorpus, vocab: Vocabulary, config: ModelConfig, *,
          window: int = 5, negative_table: NegativeTable | None = None,
          workers: int = 1, subsample_threshold: float = 0.0,
          checkpoint_interval: int = 0, checkpoint_callback=None,
          ) -> tuple[ParameterStore, TrainStats]:
    """Run SGNS training over the interleaved pair stream.

    The learning rate decays linearly from ``learning_rate`` to ``lr_min``
    over the expected total number of pairs. With ``workers > 1`` the
    sentence list is sharded across lock-free threads (see the module
    docstring); single-worker runs are bit-reproducible given the seed.
    ``checkpoint_callback(epoch, store, stats)`` fires every
    ``checkpoint_interval`` epochs when both are set.
    """
    if len(vocab) == 0:
        raise CorpusError("vocabulary is empty")
    if len(corpus) == 0:
        raise CorpusError("corpus is empty")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    table = negative_table if negative_table is not None else build_negative_table(vocab)
    keep_prob = subsample_keep_probabilities(vocab, subsample_threshold)
    store = init_parameters(vocab, config, np.random.default_rng([config.seed, 0]))
    stats = TrainStats()
    if config.epochs == 0:
        return store, stats
    total_pairs = config.epochs * expected_pairs_per_epoch(corpus, window)
    if total_pairs <= 0:
        raise CorpusError("training stream is empty (no sentence yields any pair)")
    clock = _Clock()

    if workers == 1:
        _train_single(store, stats, config, corpus.sentences, window, keep_prob,
                      table, clock, total_pairs, checkpoint_interval, checkpoint_callback)
    else:
        _train_hogwild(store, stats, config, corpus.sentences, window, keep_prob,
                       table, clock, total_pairs, workers,
                       checkpoint_interval, checkpoint_callback)
    if stats.pairs_processed == 0 and stats.skipped_singular == 0:
        raise CorpusError("training stream is empty (no sentence yields any pair)")
    return store, stats


def _train_single(store, stats, config, sentences, window, keep_prob, table,
                  clock, total_pairs, checkpoint_interval, checkpoint_callback):
    for epoch in range(config.epochs):
        stats.lr_samples.append(
            (clock.value, linear_lr(config.learning_rate, config.lr_min,
                                    clock.value, total_pairs)))
        loss_sum, n, skipped, ema = _epoch_pass(
            store, config, sentences, window, keep_prob, table, clock, total_pairs,
            pair_rng=np.random.default_rng([config.seed, 1000 + epoch]),
            neg_rng=np.random.default_rng([config.seed, 2000 + epoch]),
            ema_start=stats.mean_loss,
        )
        stats.pairs_processed += n
        stats.skipped_singular += skipped
        stats.mean_loss = ema
        stats.epoch = epoch + 1
        stats.epoch_losses.append(loss_sum / n if n else float("nan"))
        _maybe_checkpoint(epoch, store, stats, checkpoint_interval, checkpoint_callback)


def _train_hogwild(store, stats, config, sentences, window, keep_prob, table,
                   clock, total_pairs, workers, checkpoint_interval,
                   checkpoint_callback):
    shards = [sentences[w::workers] for w in range(workers)]
    shards = [s for s in shards if s]
    n_threads = len(shards)
    barrier = threading.Barrier(n_threads)
    results = [[None] * config.epochs for _ in range(n_threads)]
    errors: list[BaseException] = []

    def run(widx: int) -> None:
        try:
            ema = float("nan")
            for epoch in range(config.epochs):
                out = _epoch_pass(
                    store, config, shards[widx], window, keep_prob, table, clock,
                    total_pairs,
                    pair_rng=np.random.default_rng([config.seed, 1000 + epoch, widx]),
                    neg_rng=np.random.default_rng([config.seed, 2000 + epoch, widx]),
                    ema_start=ema,
                )
                ema = out[3]
                results[widx][epoch] = out
                barrier.wait()
                if widx == 0:
                    _merge_epoch(stats, results, epoch)
                    _maybe_checkpoint(epoch, store, stats,
                                      checkpoint_interval, checkpoint_callback)
                barrier.wait()
        except BaseException as exc:  # surfaced to the caller after join
            errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=run, args=(w,), name=f"hypervec-train-{w}")
               for w in range(n_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        # prefer the root cause over the broken-barrier fallout it triggered
        primary = [e for e in errors if not isinstance(e, threading.BrokenBarrierError)]
        raise (primary or errors)[0]


def _merge_epoch(stats: TrainStats, results, epoch: int) -> None:
    per_worker = [r[epoch] for r in results]
    loss_sum = sum(r[0] for r in per_worker)
    n = sum(r[1] for r in per_worker)
    stats.pairs_processed += n
    stats.skipped_singular += sum(r[2] for r in per_worker)
    emas = [(r[3], r[1]) for r in per_worker if r[1] > 0]
    if emas:
        stats.mean_loss = sum(e * w for e, w in emas) / sum(w for _, w in emas)
    stats.epoch = epoch + 1
    stats.epoch_losses.append(loss_sum / n if n else float("nan"))


def _maybe_checkpoint(epoch, store, stats, interval, callback):
    if callback is not None and interval > 0 and (epoch + 1) % interval == 0:
        callback(epoch + 1, store, stats)
