"""Cross-lingual word embeddings in the Poincare ball, with a Euclidean baseline."""

from .corpus import (
    OutOfVocabularyError,
    ParallelCorpusReader,
    SentencePair,
    Vocabulary,
    build_vocabulary,
    load_parallel_corpus,
)
from .errors import HypervecError
from .estimator import CrossLingualWord2Vec
from .evaluation import (
    AnalogyQuery,
    EvalReport,
    HyperLexRecord,
    analogy_predict,
    closest_children,
    eval_analogy,
    eval_hyperlex,
    is_a_score,
    nearest_neighbors,
    norm_frequency_correlation,
    spearman,
)
from .model import ModelConfig, ParameterStore, TrainStats, train
from .persistence import load_embeddings, save_embeddings

__version__ = "0.1.0"

__all__ = [
    "AnalogyQuery",
    "CrossLingualWord2Vec",
    "EvalReport",
    "HypervecError",
    "HyperLexRecord",
    "ModelConfig",
    "OutOfVocabularyError",
    "ParallelCorpusReader",
    "ParameterStore",
    "SentencePair",
    "TrainStats",
    "Vocabulary",
    "analogy_predict",
    "build_vocabulary",
    "closest_children",
    "eval_analogy",
    "eval_hyperlex",
    "is_a_score",
    "load_embeddings",
    "load_parallel_corpus",
    "nearest_neighbors",
    "norm_frequency_correlation",
    "save_embeddings",
    "spearman",
    "train",
    "__version__",
]
