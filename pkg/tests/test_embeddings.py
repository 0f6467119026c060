"""Tests for the embedding data model and on-disk formats."""

import numpy as np
import pytest

from entmetrics.embeddings import (
    EmbeddingSet,
    FormatError,
    LabeledSet,
    PairedInput,
    attach_labels,
    decode_embeddings,
    encode_embeddings,
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)


class TestEmbeddingSet:
    def test_basic_shape(self):
        s = EmbeddingSet(np.zeros((3, 2)))
        assert s.n == 3
        assert s.d == 2

    def test_rejects_non_finite_with_location(self):
        data = np.zeros((3, 2))
        data[1, 0] = np.nan
        with pytest.raises(ValueError, match="row 1, column 0"):
            EmbeddingSet(data)
        data = np.zeros((3, 2))
        data[2, 1] = np.inf
        with pytest.raises(ValueError, match="row 2, column 1"):
            EmbeddingSet(data)

    def test_rejects_empty_and_wrong_ndim(self):
        with pytest.raises(ValueError):
            EmbeddingSet(np.zeros((0, 4)))
        with pytest.raises(ValueError):
            EmbeddingSet(np.zeros(5))

    def test_data_is_read_only(self):
        s = EmbeddingSet(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            s.data[0, 0] = 1.0


class TestPairedInput:
    def test_eta(self):
        pair = PairedInput(EmbeddingSet(np.zeros((4, 2))), EmbeddingSet(np.ones((2, 2))))
        assert pair.eta == 0.5

    def test_dimension_mismatch_names_both(self):
        with pytest.raises(ValueError, match=r"real d=2.*generated d=3"):
            PairedInput(EmbeddingSet(np.zeros((2, 2))), EmbeddingSet(np.zeros((2, 3))))


class TestBinaryFormat:
    def test_round_trip_bit_exact(self):
        """decode(encode(s)) reproduces the float32-representable payload bitwise."""
        rng = np.random.default_rng(0)
        for _ in range(5):
            n, d = rng.integers(1, 40), rng.integers(1, 12)
            data = rng.standard_normal((n, d)).astype(np.float32).astype(np.float64)
            s = EmbeddingSet(data)
            back = decode_embeddings(encode_embeddings(s))
            assert np.array_equal(back.data, s.data)
            assert encode_embeddings(back) == encode_embeddings(s)

    def test_header_truncated(self):
        with pytest.raises(FormatError, match="truncated"):
            decode_embeddings(b"EMB1")

    def test_bad_magic(self):
        blob = encode_embeddings(EmbeddingSet(np.zeros((1, 1))))
        with pytest.raises(FormatError, match="magic"):
            decode_embeddings(b"NOPE" + blob[4:])

    def test_payload_length_mismatch_reports_counts(self):
        blob = encode_embeddings(EmbeddingSet(np.zeros((3, 2))))
        with pytest.raises(FormatError, match="holds 5 floats.*declares 6"):
            decode_embeddings(blob[:-4])

    def test_non_finite_payload_located(self):
        data = np.zeros((2, 2), dtype=np.float32)
        data[1, 1] = np.inf
        blob = encode_embeddings(EmbeddingSet(np.zeros((2, 2))))
        blob = blob[:16] + data.tobytes()
        with pytest.raises(FormatError, match="row 1, column 1"):
            decode_embeddings(blob)


class TestCsvFormat:
    def test_round_trip_values(self):
        rng = np.random.default_rng(1)
        s = EmbeddingSet(rng.standard_normal((7, 3)))
        back = decode_embeddings(encode_embeddings(s, format="csv"), format="csv")
        assert np.array_equal(back.data, s.data)

    def test_skips_blank_and_comment_lines(self):
        text = b"# header\n1.0,2.0\n\n3.0,4.0\n"
        s = decode_embeddings(text, format="csv")
        np.testing.assert_allclose(s.data, [[1.0, 2.0], [3.0, 4.0]])

    def test_ragged_row_reports_line(self):
        with pytest.raises(FormatError, match="line 2"):
            decode_embeddings(b"1.0,2.0\n3.0\n", format="csv")

    def test_empty_stream(self):
        with pytest.raises(FormatError, match="no data rows"):
            decode_embeddings(b"# nothing\n", format="csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            decode_embeddings(b"", format="parquet")


class TestAttachLabels:
    def test_two_classes(self):
        ls = attach_labels(EmbeddingSet(np.zeros((3, 1))), [0, 0, 1])
        assert ls.classes.tolist() == [0, 1]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            attach_labels(EmbeddingSet(np.zeros((3, 1))), [0, 1])

    def test_empty_labels_on_one_row_set(self):
        with pytest.raises(ValueError):
            attach_labels(EmbeddingSet(np.zeros((1, 1))), [])

    def test_never_reorders(self):
        labels = ["b", "a", "c"]
        ls = attach_labels(EmbeddingSet(np.arange(3.0).reshape(3, 1)), labels)
        assert ls.labels.tolist() == labels

    def test_labeled_set_length_validation(self):
        with pytest.raises(ValueError):
            LabeledSet(EmbeddingSet(np.zeros((2, 1))), np.array([1, 2, 3]))


class TestFileIO:
    def test_binary_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        s = EmbeddingSet(rng.standard_normal((5, 4)).astype(np.float32).astype(np.float64))
        path = tmp_path / "x.emb"
        write_embeddings(path, s)
        assert np.array_equal(read_embeddings(path).data, s.data)

    def test_csv_file_sniffed(self, tmp_path):
        s = EmbeddingSet(np.array([[1.5, -2.25]]))
        path = tmp_path / "x.csv"
        write_embeddings(path, s, format="csv")
        assert np.array_equal(read_embeddings(path).data, s.data)

    def test_labels_round_trip_int_and_str(self, tmp_path):
        p = tmp_path / "l.labels"
        write_labels(p, [3, 1, 2])
        got = read_labels(p)
        assert got.dtype.kind == "i"
        assert got.tolist() == [3, 1, 2]
        write_labels(p, ["a", "b"])
        assert read_labels(p).tolist() == ["a", "b"]

    def test_empty_label_file(self, tmp_path):
        p = tmp_path / "e.labels"
        p.write_text("")
        with pytest.raises(FormatError, match="empty"):
            read_labels(p)
