"""Scikit-learn style estimator wrapping the full training pipeline.

The estimator consumes an in-memory parallel corpus and learns one shared
bilingual embedding space; ``transform`` then maps words to their learned
vectors so the model composes with the usual pipeline machinery.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import (
    CorpusError,
    OutOfVocabularyError,
    SentencePair,
    build_vocabulary,
    encode_corpus,
    tokenize_line,
)
from .evaluation import nearest_neighbors
from .model import ModelConfig, train
from .persistence import load_embeddings, save_embeddings


class CrossLingualWord2Vec(BaseEstimator):
    """Cross-lingual skip-gram embeddings in the Poincare ball or Euclidean space.

    Trains a single shared embedding space from aligned sentence pairs using
    skip-gram negative sampling; sentence pairs additionally contribute
    index-aligned cross-lingual training pairs. In the ``"poincare"``
    geometry the optimizer is Riemannian SGD and word norms come to encode
    specificity (general words near the origin, specific words near the
    boundary), which powers the hypernymy-style queries in
    :mod:`hypervec.evaluation`.

    Parameters
    ----------
    geometry : {"poincare", "euclidean"}, default="poincare"
        Embedding space and matching optimizer.
    dim : int, default=100
        Embedding dimensionality.
    window : int, default=5
        Maximum skip-gram window; the per-position span is drawn uniformly
        from [1, window].
    min_count : int, default=100
        Words rarer than this (counting both languages) are dropped.
    negatives : int, default=5
        Negative samples per training pair.
    epochs : int, default=5
        Passes over the corpus. ``0`` returns the untouched initialization.
    learning_rate : float, optional
        Initial learning rate; defaults to 0.025 (euclidean) or 0.05 (poincare).
    lr_min : float, optional
        Linear-decay floor; defaults to ``1e-4 * learning_rate``.
    use_bias : bool, default=False
        Add a learned scalar bias per context word to the score.
    target_bias : bool, default=False
        Also add a bias on the target word (requires ``use_bias``).
    retraction : {"exp_map", "first_order"}, default="exp_map"
        Riemannian update rule in the ball: exponential map or a projected
        first-order step.
    ball_epsilon : float, default=1e-5
        Safety margin keeping iterates off the ball boundary.
    init_radius : float, default=0.001
        Maximum norm of the near-origin random initialization (poincare).
    smoothing_power : float, default=0.75
        Exponent of the unigram negative-sampling distribution.
    subsample : float, default=0.0
        Frequent-word subsampling threshold for the monolingual streams;
        0 disables it.
    lang_tags : bool, default=False
        Prefix tokens with ``de:`` / ``en:`` so identically spelled words of
        the two languages do not collide.
    workers : int, default=1
        Lock-free training threads. Only ``workers=1`` is bit-reproducible.
    seed : int, default=1
        Seed for initialization, window draws, and negative sampling.
    alpha : float, default=1000.0
        Norm-weight coefficient recorded for downstream hypernymy scoring.

    Attributes
    ----------
    vocab_ : Vocabulary
        Shared bilingual vocabulary built during :meth:`fit`.
    store_ : ParameterStore
        Trained parameters; ``store_.target_vectors`` are the embeddings.
    stats_ : TrainStats
        Pair counts and loss curve of the run.

    Examples
    --------
    >>> pairs = [("der hund schläft", "the dog sleeps")] * 50
    >>> model = CrossLingualWord2Vec(dim=10, min_count=1, epochs=3, seed=0)
    >>> vectors = model.fit(pairs).transform(["hund", "dog"])
    >>> vectors.shape
    (2, 10)
    """

    def __init__(self, geometry="poincare", dim=100, window=5, min_count=100,
                 negatives=5, epochs=5, learning_rate=None, lr_min=None,
                 use_bias=False, target_bias=False, retraction="exp_map",
                 ball_epsilon=1e-5, init_radius=0.001, smoothing_power=0.75,
                 subsample=0.0, lang_tags=False, workers=1, seed=1, alpha=1000.0):
        self.geometry = geometry
        self.dim = dim
        self.window = window
        self.min_count = min_count
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lr_min = lr_min
        self.use_bias = use_bias
        self.target_bias = target_bias
        self.retraction = retraction
        self.ball_epsilon = ball_epsilon
        self.init_radius = init_radius
        self.smoothing_power = smoothing_power
        self.subsample = subsample
        self.lang_tags = lang_tags
        self.workers = workers
        self.seed = seed
        self.alpha = alpha

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            geometry=self.geometry,
            dim=self.dim,
            use_bias=self.use_bias,
            target_bias=self.target_bias,
            negatives_per_pair=self.negatives,
            learning_rate=self.learning_rate,
            lr_min=self.lr_min,
            epochs=self.epochs,
            seed=self.seed,
            ball_epsilon=self.ball_epsilon,
            retraction=self.retraction,
            init_radius=self.init_radius,
        )

    def _as_sentence_pairs(self, X) -> list[SentencePair]:
        pairs = []
        for item in X:
            if isinstance(item, SentencePair):
                src, tgt = item.src_tokens, item.tgt_tokens
            else:
                try:
                    raw_src, raw_tgt = item
                except (TypeError, ValueError):
                    raise ValueError(
                        "fit expects an iterable of (source, target) sentence pairs"
                    ) from None
                src = tokenize_line(raw_src) if isinstance(raw_src, str) else [str(t).lower() for t in raw_src]
                tgt = tokenize_line(raw_tgt) if isinstance(raw_tgt, str) else [str(t).lower() for t in raw_tgt]
            if self.lang_tags:
                src = ["de:" + t for t in src]
                tgt = ["en:" + t for t in tgt]
            if src and tgt:
                pairs.append(SentencePair(src, tgt))
        if not pairs:
            raise CorpusError("no usable sentence pairs in the training data")
        return pairs

    def fit(self, X, y=None):
        """Learn the shared embedding space from aligned sentence pairs.

        Parameters
        ----------
        X : iterable of (source, target)
            Each side is a raw string (tokenized by whitespace + lowercase)
            or a pre-tokenized sequence. Pairs with an empty side are dropped.
        y : ignored
            Present for scikit-learn API compatibility.
        """
        config = self._model_config()
        pairs = self._as_sentence_pairs(X)
        self.vocab_ = build_vocabulary(pairs, self.min_count)
        corpus = encode_corpus(pairs, self.vocab_)
        self.store_, self.stats_ = train(
            corpus, self.vocab_, config,
            window=self.window,
            workers=self.workers,
            subsample_threshold=self.subsample,
        )
        return self

    def transform(self, X) -> np.ndarray:
        """Map an iterable of words to their embedding vectors.

        Raises :class:`OutOfVocabularyError` naming the missing words if any
        are unknown.
        """
        check_is_fitted(self, "store_")
        words = [X] if isinstance(X, str) else list(X)
        missing = [w for w in words if w not in self.vocab_]
        if missing:
            raise OutOfVocabularyError(
                f"words not in the trained vocabulary: {', '.join(sorted(set(missing)))}"
            )
        ids = [self.vocab_.id_of(w) for w in words]
        return self.store_.target_vectors[ids].copy()

    def word_vector(self, word: str) -> np.ndarray:
        return self.transform([word])[0]

    def most_similar(self, word: str, k: int = 10) -> list[tuple[str, float]]:
        """Nearest neighbors by hyperbolic distance (ascending) or cosine
        similarity (descending), depending on the geometry."""
        check_is_fitted(self, "store_")
        return nearest_neighbors(word, k, self.store_, self.vocab_)

    def run_metadata(self, **extra) -> dict:
        """Everything needed to reconstruct this run, for the sidecar."""
        check_is_fitted(self, "store_")
        config = self._model_config()
        metadata = {
            "geometry": self.geometry,
            "dim": self.dim,
            "use_bias": self.use_bias,
            "target_bias": self.target_bias,
            "h_function": "cosh2",
            "min_count": self.min_count,
            "window": self.window,
            "negatives": self.negatives,
            "epochs": self.epochs,
            "learning_rate": config.learning_rate,
            "lr_min": config.lr_min,
            "retraction": self.retraction,
            "ball_epsilon": self.ball_epsilon,
            "init_radius": self.init_radius,
            "smoothing_power": self.smoothing_power,
            "subsample": self.subsample,
            "lang_tags": self.lang_tags,
            "workers": self.workers,
            "seed": self.seed,
            "alpha": self.alpha,
        }
        metadata.update(extra)
        return metadata

    def save(self, path, **extra_metadata) -> None:
        """Write the embeddings with sidecar metadata and the vocab dump."""
        check_is_fitted(self, "store_")
        save_embeddings(self.store_, self.vocab_, self.run_metadata(**extra_metadata), path)

    @classmethod
    def from_file(cls, path) -> "CrossLingualWord2Vec":
        """Rebuild a fitted (read-only) estimator from a saved embedding file."""
        store, vocab, metadata = load_embeddings(path)
        est = cls(geometry=store.geometry, dim=store.dim)
        for key, cast in (("window", int), ("min_count", int), ("negatives", int),
                          ("epochs", int), ("seed", int), ("alpha", float)):
            if key in metadata:
                setattr(est, key, cast(metadata[key]))
        est.use_bias = metadata.get("use_bias") == "True"
        est.store_ = store
        est.vocab_ = vocab
        return est
