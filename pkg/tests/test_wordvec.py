import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scenecontext.wordvec import (
    EmbeddingParseError,
    EmbeddingTable,
    OutOfVocabularyError,
    build_cache,
    concat_pair,
    load_cache,
    lookup,
    parse_binary,
    parse_text,
    save_cache,
    serialize_binary,
    serialize_text,
)


def text_stream(content: str):
    return io.StringIO(content)


def make_table(**vectors):
    dim = len(next(iter(vectors.values())))
    return EmbeddingTable(dim, {k: np.array(v, dtype=float) for k, v in vectors.items()})


def independent_binary_bytes(entries, dim):
    """Reference serializer used only by tests: header + 'word<sp><f4*d>\\n'."""
    blob = f"{len(entries)} {dim}\n".encode("ascii")
    for word, values in entries:
        blob += word.encode("utf-8") + b" " + struct.pack(f"<{dim}f", *values) + b"\n"
    return blob


class TestParseText:
    def test_two_words(self):
        table = parse_text(text_stream("2 3\ncat 1 2 3\ndog 4 5 6\n"))
        assert len(table) == 2 and table.dimension == 3
        np.testing.assert_array_equal(table.vector("cat"), [1.0, 2.0, 3.0])

    def test_dimension_mismatch_line_number(self):
        with pytest.raises(EmbeddingParseError, match="line 2"):
            parse_text(text_stream("1 3\ncat 1 2\n"))

    def test_count_mismatch(self):
        with pytest.raises(EmbeddingParseError, match="declared 3"):
            parse_text(text_stream("3 2\na 1 2\nb 3 4\n"))

    def test_non_numeric(self):
        with pytest.raises(EmbeddingParseError, match="non-numeric"):
            parse_text(text_stream("1 2\ncat 1 x\n"))

    def test_duplicate_word(self):
        with pytest.raises(EmbeddingParseError, match="duplicate"):
            parse_text(text_stream("2 1\ncat 1\ncat 2\n"))

    def test_bad_header(self):
        with pytest.raises(EmbeddingParseError, match="header"):
            parse_text(text_stream("banana\n"))

    def test_fixture_values_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        words = [f"w{i}" for i in range(10)]
        rows = {w: rng.standard_normal(300) for w in words}
        path = tmp_path / "vecs.txt"
        lines = [f"{len(words)} 300"]
        lines += [f"{w} " + " ".join(repr(float(v)) for v in rows[w]) for w in words]
        path.write_text("\n".join(lines) + "\n")
        table = parse_text(path)
        for w in words:
            np.testing.assert_array_equal(table.vector(w), rows[w])

    def test_restrict(self):
        table = parse_text(text_stream("3 1\na 1\nb 2\nc 3\n"), restrict={"b"})
        assert len(table) == 1 and "b" in table


class TestParseBinary:
    def test_crafted_fixture_bit_exact(self):
        values = [(0.25, -1.5, 3.0), (1e-3, 2.5, -0.125)]
        blob = independent_binary_bytes([("cat", values[0]), ("dog", values[1])], 3)
        table = parse_binary(io.BytesIO(blob))
        np.testing.assert_array_equal(table.vector("cat"), np.array(values[0], dtype=np.float32))
        np.testing.assert_array_equal(table.vector("dog"), np.array(values[1], dtype=np.float32))

    def test_empty_stream(self):
        with pytest.raises(EmbeddingParseError, match="offset 0"):
            parse_binary(io.BytesIO(b""))

    def test_truncated_record_offset(self):
        blob = independent_binary_bytes([("cat", (1.0, 2.0))], 2)
        with pytest.raises(EmbeddingParseError, match="byte offset"):
            parse_binary(io.BytesIO(blob[:-5]))

    def test_no_trailing_newline_accepted(self):
        blob = f"1 2\n".encode() + b"cat " + struct.pack("<2f", 1.0, 2.0)
        table = parse_binary(io.BytesIO(blob))
        assert "cat" in table

    def test_cross_format_agreement(self, tmp_path):
        rng = np.random.default_rng(7)
        # float32-representable values so the narrowing is exact
        table = make_table(
            cat=rng.standard_normal(5).astype(np.float32).astype(float),
            dog=rng.standard_normal(5).astype(np.float32).astype(float),
        )
        tpath, bpath = tmp_path / "v.txt", tmp_path / "v.bin"
        serialize_text(table, tpath)
        serialize_binary(table, bpath)
        from_text, from_binary = parse_text(tpath), parse_binary(bpath)
        for word in table.words():
            np.testing.assert_allclose(
                from_text.vector(word), from_binary.vector(word), rtol=0, atol=0
            )

    def test_round_trip_binary(self, tmp_path):
        rng = np.random.default_rng(3)
        table = make_table(
            alpha=rng.standard_normal(4).astype(np.float32).astype(float),
            beta=rng.standard_normal(4).astype(np.float32).astype(float),
        )
        path = tmp_path / "v.bin"
        serialize_binary(table, path)
        again = parse_binary(path)
        for word in table.words():
            np.testing.assert_array_equal(again.vector(word), table.vector(word))


class TestTextRoundTrip:
    @settings(max_examples=25, deadline=None)
    @given(
        st.dictionaries(
            st.text(
                alphabet=st.characters(whitelist_categories=("Ll", "Lu"), max_codepoint=0x24F),
                min_size=1,
                max_size=8,
            ),
            st.lists(
                st.floats(allow_nan=False, allow_infinity=False, width=32),
                min_size=3,
                max_size=3,
            ),
            min_size=1,
            max_size=6,
        )
    )
    def test_serialize_parse_identity(self, tmp_path_factory, mapping):
        table = EmbeddingTable(3, {w: np.array(v) for w, v in mapping.items()})
        path = tmp_path_factory.mktemp("wv") / "t.txt"
        serialize_text(table, path)
        again = parse_text(path)
        assert set(again.words()) == set(table.words())
        for w in table.words():
            np.testing.assert_array_equal(again.vector(w), table.vector(w))


class TestLookup:
    def test_single_token(self):
        table = make_table(cat=(1, 2, 3))
        np.testing.assert_array_equal(lookup(table, "cat"), [1, 2, 3])

    def test_multi_token_mean(self):
        table = make_table(cat=(1, 2, 3), dog=(3, 2, 1))
        np.testing.assert_array_equal(lookup(table, "cat dog"), [2.0, 2.0, 2.0])

    def test_partial_multi_token(self):
        table = make_table(light=(4, 4, 4))
        np.testing.assert_array_equal(lookup(table, "traffic light"), [4, 4, 4])

    def test_case_insensitive_fallback(self):
        table = make_table(Cat=(1, 1, 1))
        np.testing.assert_array_equal(lookup(table, "cat"), [1, 1, 1])

    def test_oov_raises(self):
        table = make_table(cat=(1, 2, 3))
        with pytest.raises(OutOfVocabularyError, match="qzx"):
            lookup(table, "qzx")

    def test_oov_zero_fallback(self):
        table = make_table(cat=(1, 2, 3))
        np.testing.assert_array_equal(lookup(table, "qzx", fallback="zero"), [0, 0, 0])

    def test_empty_name(self):
        table = make_table(cat=(1, 2, 3))
        with pytest.raises(ValueError):
            lookup(table, "   ")

    def test_mean_of_copies_is_identity(self):
        table = make_table(v=(0.5, -1.25, 8.0))
        np.testing.assert_array_equal(lookup(table, "v v v"), [0.5, -1.25, 8.0])

    def test_whole_name_entry_beats_token_average(self):
        # cache files key vectors by the full dictionary name, spaces and all
        table = EmbeddingTable(
            3,
            {
                "traffic light": np.array([9.0, 9.0, 9.0]),
                "traffic": np.array([1.0, 1.0, 1.0]),
                "light": np.array([2.0, 2.0, 2.0]),
            },
        )
        np.testing.assert_array_equal(lookup(table, "traffic light"), [9, 9, 9])

    def test_whole_name_case_insensitive(self):
        table = EmbeddingTable(2, {"Traffic Light": np.array([7.0, 7.0])})
        np.testing.assert_array_equal(lookup(table, "traffic light"), [7, 7])

    def test_whole_name_result_is_a_copy(self):
        table = EmbeddingTable(2, {"cat": np.array([1.0, 2.0])})
        vec = lookup(table, "cat")
        vec[0] = 99.0
        np.testing.assert_array_equal(lookup(table, "cat"), [1, 2])


class TestConcatPair:
    def test_order(self):
        np.testing.assert_array_equal(concat_pair([1, 2], [3, 4]), [1, 2, 3, 4])

    def test_full_width(self):
        out = concat_pair(np.zeros(300), np.ones(300))
        assert out.shape == (600,)

    def test_not_commutative(self):
        a, b = np.array([1.0, 2.0]), np.array([9.0, 9.0])
        assert not np.array_equal(concat_pair(a, b), concat_pair(b, a))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            concat_pair([1, 2], [1, 2, 3])


class TestCache:
    def test_round_trip(self, tmp_path):
        table = make_table(**{"cat": (1, 2, 3), "traffic light": (0, 0, 0), "light": (2, 2, 2)})
        cache = build_cache(table, ["cat", "light"])
        path = tmp_path / "cache.json"
        save_cache(cache, path)
        loaded = load_cache(path)
        np.testing.assert_array_equal(loaded["cat"], [1, 2, 3])
        np.testing.assert_array_equal(loaded["light"], [2, 2, 2])
