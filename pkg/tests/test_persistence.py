import numpy as np
import pytest

from hypervec.corpus import Vocabulary
from hypervec.datasets import DatasetError, parse_analogy_file, parse_hyperlex_file
from hypervec.model import ModelConfig, ParameterStore, TrainStats, init_parameters
from hypervec.persistence import (
    PersistenceError,
    load_checkpoint,
    load_embeddings,
    read_metadata,
    save_checkpoint,
    save_embeddings,
    write_metadata,
)

from geomprops import random_ball_points


def make_vocab(words, counts=None):
    counts = counts if counts is not None else list(range(len(words) + 1, 1, -1))
    return Vocabulary(
        word_to_id={w: i for i, w in enumerate(words)},
        id_to_word=list(words),
        counts=np.asarray(counts, dtype=np.int64),
        total_tokens=int(np.sum(counts)),
        min_count=1,
    )


def sample_store_and_vocab(geometry="poincare", n=6, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    vocab = make_vocab([f"word{i}" for i in range(n)])
    cfg = ModelConfig(geometry=geometry, dim=dim, use_bias=True, seed=seed)
    store = init_parameters(vocab, cfg, rng)
    # nudge away from the all-tiny init so files carry non-trivial digits
    if geometry == "poincare":
        store.target_vectors = random_ball_points(rng, n, dim, max_norm=0.9)
    else:
        store.target_vectors = rng.normal(size=(n, dim))
    return store, vocab


def base_metadata(geometry="poincare", dim=3):
    return {"geometry": geometry, "dim": dim, "use_bias": False, "seed": 1}


class TestEmbeddingRoundTrip:
    @pytest.mark.parametrize("geometry", ["poincare", "euclidean"])
    def test_save_load_save_byte_identical(self, tmp_path, geometry):
        store, vocab = sample_store_and_vocab(geometry)
        path = tmp_path / "emb.vec"
        save_embeddings(store, vocab, base_metadata(geometry), path)
        loaded_store, loaded_vocab, metadata = load_embeddings(path)
        second = tmp_path / "emb2.vec"
        save_embeddings(loaded_store, loaded_vocab, metadata, second)
        assert path.read_bytes() == second.read_bytes()
        assert (path.parent / (path.name + ".meta")).read_bytes() == \
            (second.parent / (second.name + ".meta")).read_bytes()
        assert (path.parent / (path.name + ".vocab")).read_bytes() == \
            (second.parent / (second.name + ".vocab")).read_bytes()

    def test_coordinates_bitwise_equal(self, tmp_path):
        store, vocab = sample_store_and_vocab()
        path = tmp_path / "emb.vec"
        save_embeddings(store, vocab, base_metadata(), path)
        loaded_store, loaded_vocab, _ = load_embeddings(path)
        np.testing.assert_array_equal(loaded_store.target_vectors, store.target_vectors)
        assert loaded_vocab.id_to_word == vocab.id_to_word
        np.testing.assert_array_equal(loaded_vocab.counts, vocab.counts)

    def test_metadata_requires_geometry(self, tmp_path):
        store, vocab = sample_store_and_vocab()
        with pytest.raises(PersistenceError):
            save_embeddings(store, vocab, {"dim": 3}, tmp_path / "x.vec")


class TestEmbeddingLoadErrors:
    def write_valid(self, tmp_path, geometry="poincare"):
        store, vocab = sample_store_and_vocab(geometry)
        path = tmp_path / "emb.vec"
        save_embeddings(store, vocab, base_metadata(geometry), path)
        return path

    def test_missing_sidecar(self, tmp_path):
        path = self.write_valid(tmp_path)
        (tmp_path / "emb.vec.meta").unlink()
        with pytest.raises(PersistenceError, match="sidecar"):
            load_embeddings(path)

    def test_short_body_reports_missing_line(self, tmp_path):
        path = self.write_valid(tmp_path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(PersistenceError, match=f":{len(lines)}"):
            load_embeddings(path)

    def test_trailing_rows_rejected(self, tmp_path):
        path = self.write_valid(tmp_path)
        with open(path, "a") as out:
            out.write("extra 0.1 0.1 0.1\n")
        with pytest.raises(PersistenceError, match="trailing"):
            load_embeddings(path)

    def test_out_of_ball_row_names_word(self, tmp_path):
        path = self.write_valid(tmp_path)
        lines = path.read_text().splitlines()
        lines[1] = "word0 1.2 0 0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(PersistenceError, match="word0"):
            load_embeddings(path)

    def test_euclidean_rows_may_exceed_one(self, tmp_path):
        path = self.write_valid(tmp_path, geometry="euclidean")
        lines = path.read_text().splitlines()
        lines[1] = "word0 5.0 0 0"
        path.write_text("\n".join(lines) + "\n")
        store, _, _ = load_embeddings(path)
        assert store.target_vectors[0, 0] == 5.0

    def test_malformed_header(self, tmp_path):
        path = self.write_valid(tmp_path)
        lines = path.read_text().splitlines()
        lines[0] = "not a header"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(PersistenceError, match=":1"):
            load_embeddings(path)

    def test_non_numeric_coordinate_names_line(self, tmp_path):
        path = self.write_valid(tmp_path)
        lines = path.read_text().splitlines()
        lines[3] = "word2 0.1 oops 0.3"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(PersistenceError, match=":4"):
            load_embeddings(path)

    def test_sidecar_dim_conflict(self, tmp_path):
        path = self.write_valid(tmp_path)
        meta_path = tmp_path / "emb.vec.meta"
        metadata = read_metadata(meta_path)
        metadata["dim"] = 99
        write_metadata(metadata, meta_path)
        with pytest.raises(PersistenceError, match="dim"):
            load_embeddings(path)

    def test_bad_geometry_in_sidecar(self, tmp_path):
        path = self.write_valid(tmp_path)
        meta_path = tmp_path / "emb.vec.meta"
        metadata = read_metadata(meta_path)
        metadata["geometry"] = "weird"
        write_metadata(metadata, meta_path)
        with pytest.raises(PersistenceError, match="geometry"):
            load_embeddings(path)


class TestMetadata:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "m.meta"
        metadata = {"geometry": "poincare", "dim": "10", "alpha": "1000.0"}
        write_metadata(metadata, path)
        assert read_metadata(path) == metadata

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "m.meta"
        path.write_text("geometry = poincare\nnonsense\n")
        with pytest.raises(PersistenceError, match=":2"):
            read_metadata(path)


class TestCheckpoint:
    def test_full_state_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        vocab = make_vocab(["a", "b", "c"])
        store = ParameterStore(
            geometry="poincare",
            target_vectors=random_ball_points(rng, 3, 2),
            context_vectors=random_ball_points(rng, 3, 2),
            context_bias=rng.normal(size=3),
            target_bias=rng.normal(size=3),
        )
        stats = TrainStats(pairs_processed=123, mean_loss=0.5, epoch=4,
                           skipped_singular=2)
        path = tmp_path / "ckpt"
        save_checkpoint(store, vocab, base_metadata(dim=2), stats, path)
        loaded, loaded_vocab, _, loaded_stats = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.target_vectors, store.target_vectors)
        np.testing.assert_array_equal(loaded.context_vectors, store.context_vectors)
        np.testing.assert_array_equal(loaded.context_bias, store.context_bias)
        np.testing.assert_array_equal(loaded.target_bias, store.target_bias)
        assert loaded_stats.pairs_processed == 123
        assert loaded_stats.epoch == 4
        assert loaded_stats.skipped_singular == 2
        assert loaded_vocab.id_to_word == ["a", "b", "c"]

    def test_checkpoint_without_biases(self, tmp_path):
        rng = np.random.default_rng(2)
        vocab = make_vocab(["x", "y"])
        store = ParameterStore(
            geometry="euclidean",
            target_vectors=rng.normal(size=(2, 2)),
            context_vectors=rng.normal(size=(2, 2)),
        )
        path = tmp_path / "ckpt"
        save_checkpoint(store, vocab, base_metadata("euclidean", 2), TrainStats(), path)
        loaded, _, _, _ = load_checkpoint(path)
        assert loaded.context_bias is None
        assert loaded.target_bias is None

    def test_checkpoint_validates_ball(self, tmp_path):
        vocab = make_vocab(["x", "y"])
        store = ParameterStore(
            geometry="poincare",
            target_vectors=np.array([[0.1, 0.0], [0.2, 0.0]]),
            context_vectors=np.array([[0.1, 0.0], [0.2, 0.0]]),
        )
        path = tmp_path / "ckpt"
        save_checkpoint(store, vocab, base_metadata(dim=2), TrainStats(), path)
        lines = path.read_text().splitlines()
        lines[1] = "x 2.0 0.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(PersistenceError, match="'x'"):
            load_checkpoint(path)


HYPERLEX_HEADER = "WORD1 WORD2 POS TYPE AVG_SCORE STD AVG_SCORE_0_10"


class TestParseHyperlex:
    def write(self, tmp_path, rows, header=HYPERLEX_HEADER):
        path = tmp_path / "hyperlex.txt"
        path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
        return path

    def test_classic_example_rows(self, tmp_path):
        path = self.write(tmp_path, [
            "chemistry science N hyp-1 3.60 0.62 6.00",
            "chemistry knife N no-rel 0.30 0.41 0.50",
        ])
        records = parse_hyperlex_file(path, "AVG_SCORE_0_10")
        assert (records[0].word_u, records[0].word_v, records[0].gold_score) == \
            ("chemistry", "science", 6.00)
        assert (records[1].word_u, records[1].word_v, records[1].gold_score) == \
            ("chemistry", "knife", 0.50)

    def test_score_column_selection(self, tmp_path):
        path = self.write(tmp_path, ["chemistry science N hyp-1 3.60 0.62 6.00"])
        records = parse_hyperlex_file(path, "AVG_SCORE")
        assert records[0].gold_score == 3.60

    def test_missing_column_lists_available(self, tmp_path):
        path = self.write(tmp_path, ["chemistry science N hyp-1 3.60 0.62 6.00"])
        with pytest.raises(DatasetError, match="AVG_SCORE_0_10"):
            parse_hyperlex_file(path, "NO_SUCH_COLUMN")

    def test_non_numeric_score_names_line(self, tmp_path):
        path = self.write(tmp_path, [
            "chemistry science N hyp-1 3.60 0.62 6.00",
            "dog cat N syn 1.0 0.1 not-a-number",
        ])
        with pytest.raises(DatasetError, match=":3"):
            parse_hyperlex_file(path)

    def test_field_count_mismatch_names_line(self, tmp_path):
        path = self.write(tmp_path, ["chemistry science 6.00"])
        with pytest.raises(DatasetError, match=":2"):
            parse_hyperlex_file(path)

    def test_words_lowercased(self, tmp_path):
        path = self.write(tmp_path, ["Chemistry Science N hyp-1 3.60 0.62 6.00"])
        records = parse_hyperlex_file(path)
        assert records[0].word_u == "chemistry"


class TestParseAnalogy:
    def test_four_word_line(self, tmp_path):
        path = tmp_path / "analogy.txt"
        path.write_text(": family\nprince princess prinz prinzessin\n", encoding="utf-8")
        queries = parse_analogy_file(path)
        assert len(queries) == 1
        q = queries[0]
        assert (q.w1, q.w2, q.w3, q.w4_gold) == \
            ("prince", "princess", "prinz", "prinzessin")

    def test_wrong_token_count_names_line(self, tmp_path):
        path = tmp_path / "analogy.txt"
        path.write_text("a b c d\na b c\n", encoding="utf-8")
        with pytest.raises(DatasetError, match=":2"):
            parse_analogy_file(path)

    def test_section_headers_skipped(self, tmp_path):
        path = tmp_path / "analogy.txt"
        path.write_text(": capitals\n: family\na b c d\n", encoding="utf-8")
        assert len(parse_analogy_file(path)) == 1
