import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from jointee.errors import ConfigError, EmbeddingFormatError
from jointee.features import (
    UNK,
    BinaryFeatureEncoder,
    EmbeddingTable,
    FeatureTables,
    Vocabulary,
    encode_token,
    load_pretrained,
    local_context,
    surrounding_relations,
)
from jointee.models import Dependency, Sentence
from jointee.tensor import Tensor


@pytest.fixture
def annotated():
    return Sentence(
        tokens=("Rebels", "attacked", "Baghdad"),
        pos=("NNS", "VBD", "NNP"),
        chunk=("B-NP", "B-VP", "B-NP"),
        deps=(Dependency(head=1, rel="nsubj"), Dependency(head=-1, rel="root"), Dependency(head=1, rel="dobj")),
    )


class TestVocabulary:
    def test_unk_is_index_zero(self, annotated):
        vocab = Vocabulary.from_corpus([annotated])
        assert vocab.words[0] == UNK
        assert vocab.lookup("never-seen") == 0
        assert len(vocab) == 4

    def test_lowercasing_switch(self, annotated):
        assert Vocabulary.from_corpus([annotated]).lookup("REBELS") != 0
        assert Vocabulary.from_corpus([annotated], lowercase=False).lookup("rebels") == 0

    def test_frequency_one_words_replaced(self):
        s = Sentence(tokens=("hit", "hit", "once"))
        vocab = Vocabulary.from_corpus([s])
        rng = np.random.default_rng(0)
        assert vocab.word_dropout_index("once", rng, 1.0) == 0
        assert vocab.word_dropout_index("once", rng, 0.0) == vocab.lookup("once")
        assert vocab.word_dropout_index("hit", rng, 1.0) == vocab.lookup("hit")
        assert vocab.word_dropout_index("once", None, 1.0) == vocab.lookup("once")

    def test_dict_round_trip(self, annotated):
        vocab = Vocabulary.from_corpus([annotated])
        back = Vocabulary.from_dict(vocab.to_dict())
        assert back.words == vocab.words
        assert back.counts == vocab.counts


class TestPretrained:
    def test_matched_rows_come_from_file(self, tmp_path, annotated):
        vocab = Vocabulary.from_corpus([annotated])
        path = tmp_path / "vec.txt"
        path.write_text("2 3\nrebels 1 2 3\nunrelated 9 9 9\nbaghdad 4 5 6\n")
        table = load_pretrained(path, vocab, dim=3, rng=np.random.default_rng(0))
        assert table.pretrained_rows == 2
        assert_array_equal(table.table.values[vocab.lookup("rebels")], [1, 2, 3])
        assert_array_equal(table.table.values[vocab.lookup("baghdad")], [4, 5, 6])
        other = table.table.values[vocab.lookup("attacked")]
        assert np.all(np.abs(other) <= 0.25)

    def test_dimension_mismatch(self, tmp_path, annotated):
        path = tmp_path / "vec.txt"
        path.write_text("rebels 1 2 3 4 5\n")
        with pytest.raises(EmbeddingFormatError):
            load_pretrained(path, Vocabulary.from_corpus([annotated]), dim=300)

    def test_inconsistent_lines(self, tmp_path, annotated):
        path = tmp_path / "vec.txt"
        path.write_text("rebels 1 2\nbaghdad 1 2 3\n")
        with pytest.raises(EmbeddingFormatError):
            load_pretrained(path, Vocabulary.from_corpus([annotated]), dim=2)

    def test_missing_file(self, tmp_path, annotated):
        with pytest.raises(FileNotFoundError):
            load_pretrained(tmp_path / "none.txt", Vocabulary.from_corpus([annotated]))

    @pytest.mark.parametrize("content", ["", "\n\n", "3 300\n"])
    def test_file_without_vectors(self, tmp_path, annotated, content):
        path = tmp_path / "vec.txt"
        path.write_text(content)
        with pytest.raises(EmbeddingFormatError):
            load_pretrained(path, Vocabulary.from_corpus([annotated]), dim=300)


class TestBinaryFeatures:
    def test_relations_touching_a_token(self, annotated):
        assert surrounding_relations(annotated, 1) == {"nsubj", "dobj"}
        assert surrounding_relations(annotated, 0) == {"nsubj"}

    def test_one_hot_blocks(self, annotated):
        enc = BinaryFeatureEncoder.fit([annotated])
        assert enc.width == 3 + 2 + 2
        assert "root" not in enc.rel_index
        v = enc.encode(annotated, 0)
        assert v.sum() == 3  # POS, chunk, one relation
        assert v[enc.pos_index["NNS"]] == 1

    def test_root_token_without_dependents_has_no_relations(self):
        s = Sentence(tokens=("stop", "!"), deps=(Dependency(head=-1, rel="root"), Dependency(head=-1, rel="root")))
        assert surrounding_relations(s, 0) == set()

    def test_disabled_is_empty(self, annotated):
        enc = BinaryFeatureEncoder.fit([annotated], enabled=False)
        assert enc.width == 0
        assert enc.encode(annotated, 0).shape == (0,)

    def test_missing_annotations_leave_zeros(self, annotated):
        enc = BinaryFeatureEncoder.fit([annotated])
        bare = Sentence(tokens=("rebels",))
        assert not enc.encode(bare, 0).any()


class TestTokenEncoding:
    def _tables(self, annotated, enabled):
        vocab = Vocabulary.from_corpus([annotated])
        emb = EmbeddingTable.random(vocab, 4, np.random.default_rng(0))
        return FeatureTables(vocab, emb, BinaryFeatureEncoder.fit([annotated], enabled=enabled))

    def test_input_width(self, annotated):
        tables = self._tables(annotated, True)
        assert encode_token(annotated, 1, tables).size == 4 + 7 == tables.input_width

    def test_ablated_input_is_embedding_only(self, annotated):
        tables = self._tables(annotated, False)
        x = encode_token(annotated, 1, tables)
        assert_allclose(x.values, tables.embeddings.table.values[tables.vocab.lookup("attacked")])

    def test_local_context_zero_padding(self):
        d = [Tensor([1.0, 1.0]), Tensor([2.0, 2.0]), Tensor([3.0, 3.0])]
        assert_array_equal(local_context(d, 0, 1).values, [0, 0, 1, 1, 2, 2])
        assert_array_equal(local_context(d, 2, 1).values, [2, 2, 3, 3, 0, 0])
        assert local_context(d, 1, 2).size == 5 * 2

    def test_window_zero_is_the_token_itself(self):
        d = [Tensor([1.0]), Tensor([2.0])]
        assert_array_equal(local_context(d, 1, 0).values, [2.0])

    def test_negative_window(self):
        with pytest.raises(ConfigError):
            local_context([Tensor([1.0])], 0, -1)
