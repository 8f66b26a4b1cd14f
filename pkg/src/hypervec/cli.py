"""Command-line entry points: training, evaluation, and embedding queries.

Exit codes are a stable scripting contract: 0 on success, 1 on runtime
failure (with a diagnostic on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from . import __version__
from .corpus import build_vocabulary, encode_corpus, load_parallel_corpus, write_vocab_dump
from .datasets import DEFAULT_SCORE_COLUMN, parse_analogy_file, parse_hyperlex_file
from .errors import HypervecError
from .evaluation import (
    DEFAULT_ALPHA,
    EvalReport,
    closest_children,
    eval_analogy,
    eval_hyperlex,
    nearest_neighbors,
    norm_frequency_correlation,
)
from .model import ModelConfig, train
from .persistence import load_embeddings, save_checkpoint, save_embeddings

_RETRACTION_FLAGS = {"exp": "exp_map", "first-order": "first_order"}


@dataclass
class RunConfig:
    """Everything a training run needs; echoed verbatim into the sidecar."""

    model: ModelConfig
    src_corpus: str
    tgt_corpus: str
    out: str
    window: int
    min_count: int
    workers: int
    alpha: float
    smoothing_power: float
    subsample: float
    lang_tags: bool
    checkpoint_interval: int

    def metadata(self, **extra) -> dict:
        meta = {
            "geometry": self.model.geometry,
            "dim": self.model.dim,
            "use_bias": self.model.use_bias,
            "target_bias": self.model.target_bias,
            "h_function": "cosh2",
            "min_count": self.min_count,
            "window": self.window,
            "negatives": self.model.negatives_per_pair,
            "epochs": self.model.epochs,
            "learning_rate": self.model.learning_rate,
            "lr_min": self.model.lr_min,
            "retraction": self.model.retraction,
            "ball_epsilon": self.model.ball_epsilon,
            "init_radius": self.model.init_radius,
            "smoothing_power": self.smoothing_power,
            "subsample": self.subsample,
            "lang_tags": self.lang_tags,
            "workers": self.workers,
            "seed": self.model.seed,
            "alpha": self.alpha,
            "src_corpus": self.src_corpus,
            "tgt_corpus": self.tgt_corpus,
            "version": __version__,
        }
        meta.update(extra)
        return meta


def _add_embeddings_arg(parser):
    parser.add_argument("--embeddings", required=True, help="embedding file to load")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypervec",
        description="Cross-lingual word embeddings in the Poincare ball "
                    "(or Euclidean space), trained from line-aligned parallel corpora.",
    )
    parser.add_argument("--version", action="version", version=f"hypervec {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("train", help="train embeddings from a parallel corpus")
    p.add_argument("--src-corpus", required=True)
    p.add_argument("--tgt-corpus", required=True)
    p.add_argument("--out", required=True, help="output embedding file")
    p.add_argument("--geometry", choices=["euclidean", "poincare"], default="poincare")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--bias", action="store_true", help="learn per-context-word biases")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=None,
                   help="initial learning rate (default 0.025 euclidean / 0.05 poincare)")
    p.add_argument("--lr-min", type=float, default=None,
                   help="linear-decay floor (default 1e-4 * lr)")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--threads", type=int, default=1,
                   help="lock-free training threads; 1 is bit-reproducible")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--retraction", choices=sorted(_RETRACTION_FLAGS), default="exp",
                   help="Riemannian update rule (poincare only)")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="norm-weight coefficient recorded for hypernymy scoring")
    p.add_argument("--subsample", type=float, default=0.0,
                   help="frequent-word subsampling threshold (0 disables)")
    p.add_argument("--smoothing-power", type=float, default=0.75,
                   help="negative-sampling distribution exponent")
    p.add_argument("--lang-tags", action="store_true",
                   help="prefix tokens with de:/en: to avoid cross-language collisions")
    p.add_argument("--checkpoint-interval", type=int, default=0,
                   help="write a checkpoint every N epochs (0 disables)")
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("eval-hyperlex", help="graded hypernymy evaluation")
    _add_embeddings_arg(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--score-column", default=DEFAULT_SCORE_COLUMN)
    p.add_argument("--alpha", type=float, default=None,
                   help="override the alpha recorded in the sidecar")
    p.set_defaults(func=cmd_eval_hyperlex)

    p = commands.add_parser("eval-analogy", help="cross-lingual analogy accuracy")
    _add_embeddings_arg(p)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_eval_analogy)

    p = commands.add_parser("query-children",
                            help="nearest larger-norm (more specific) neighbors")
    _add_embeddings_arg(p)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_query_children)

    p = commands.add_parser("query-neighbors", help="nearest neighbors of a word")
    _add_embeddings_arg(p)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_query_neighbors)

    p = commands.add_parser("report-norm-freq",
                            help="Spearman between inverse frequency and norm")
    _add_embeddings_arg(p)
    p.set_defaults(func=cmd_report_norm_freq)

    p = commands.add_parser("dump-vocab", help="write the merged vocabulary as word<TAB>count")
    p.add_argument("--src-corpus", required=True)
    p.add_argument("--tgt-corpus", required=True)
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--lang-tags", action="store_true")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_dump_vocab)

    return parser


def cmd_train(args) -> int:
    config = RunConfig(
        model=ModelConfig(
            geometry=args.geometry,
            dim=args.dim,
            use_bias=args.bias,
            negatives_per_pair=args.negatives,
            learning_rate=args.lr,
            lr_min=args.lr_min,
            epochs=args.epochs,
            seed=args.seed,
            retraction=_RETRACTION_FLAGS[args.retraction],
        ),
        src_corpus=args.src_corpus,
        tgt_corpus=args.tgt_corpus,
        out=args.out,
        window=args.window,
        min_count=args.min_count,
        workers=args.threads,
        alpha=args.alpha,
        smoothing_power=args.smoothing_power,
        subsample=args.subsample,
        lang_tags=args.lang_tags,
        checkpoint_interval=args.checkpoint_interval,
    )
    reader = load_parallel_corpus(args.src_corpus, args.tgt_corpus, lang_tags=args.lang_tags)
    vocab = build_vocabulary(reader, args.min_count)
    dropped = reader.dropped
    corpus = encode_corpus(reader, vocab)

    def checkpoint(epoch, store, stats):
        path = f"{args.out}.epoch{epoch}.ckpt"
        save_checkpoint(store, vocab, config.metadata(checkpoint_epoch=epoch), stats, path)
        print(f"checkpoint written to {path}")

    store, stats = train(
        corpus, vocab, config.model,
        window=args.window,
        workers=args.threads,
        subsample_threshold=args.subsample,
        checkpoint_interval=args.checkpoint_interval,
        checkpoint_callback=checkpoint,
    )
    save_embeddings(store, vocab, config.metadata(dropped_sentence_pairs=dropped), args.out)
    print(f"trained {args.geometry} {args.dim}d embeddings for {len(vocab)} words")
    print(f"pairs processed: {stats.pairs_processed}  "
          f"skipped (singular): {stats.skipped_singular}  "
          f"final mean loss: {stats.mean_loss:.6f}")
    print(f"embeddings written to {args.out} (+ .meta, .vocab)")
    return 0


def _print_report(report: EvalReport) -> None:
    print(report.to_text())
    print(report.to_record())


def cmd_eval_hyperlex(args) -> int:
    store, vocab, metadata = load_embeddings(args.embeddings)
    records = parse_hyperlex_file(args.dataset, args.score_column)
    alpha = args.alpha if args.alpha is not None else float(metadata.get("alpha", DEFAULT_ALPHA))
    report = eval_hyperlex(records, store, vocab, alpha=alpha)
    report.extras["score_column"] = args.score_column
    _print_report(report)
    return 0


def cmd_eval_analogy(args) -> int:
    store, vocab, _ = load_embeddings(args.embeddings)
    queries = parse_analogy_file(args.dataset)
    report = eval_analogy(queries, store, vocab)
    _print_report(report)
    return 0


def cmd_query_children(args) -> int:
    store, vocab, _ = load_embeddings(args.embeddings)
    children = closest_children(args.word, args.k, store, vocab)
    if not children:
        print(f"(no larger-norm neighbors for {args.word!r})")
    for word in children:
        print(word)
    return 0


def cmd_query_neighbors(args) -> int:
    store, vocab, _ = load_embeddings(args.embeddings)
    for word, score in nearest_neighbors(args.word, args.k, store, vocab):
        print(f"{word}\t{score:.6f}")
    return 0


def cmd_report_norm_freq(args) -> int:
    store, vocab, _ = load_embeddings(args.embeddings)
    rho = norm_frequency_correlation(store, vocab)
    report = EvalReport(
        task="norm-frequency", metric=rho, evaluated=len(vocab), skipped_oov=0,
        extras={"geometry": store.geometry, "dim": store.dim},
    )
    _print_report(report)
    return 0


def cmd_dump_vocab(args) -> int:
    reader = load_parallel_corpus(args.src_corpus, args.tgt_corpus, lang_tags=args.lang_tags)
    vocab = build_vocabulary(reader, args.min_count)
    if args.out:
        write_vocab_dump(vocab, args.out)
        print(f"{len(vocab)} words written to {args.out}")
    else:
        for word, count in zip(vocab.id_to_word, vocab.counts):
            print(f"{word}\t{int(count)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed usage/help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except HypervecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
