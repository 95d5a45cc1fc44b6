import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import column_major, scan_decode, scan_encode
from sfs_csf import (
    ColumnSequence,
    CorruptStream,
    CsfBlock,
    CsfEntry,
    EncodingError,
    FormatError,
    LayerSpec,
    QuantCodebook,
    RangeError,
    ShapeError,
    build_column_counts,
    decode,
    decode_layer,
    dense_conv,
    deserialize,
    encode,
    encode_layer,
    flatten_columns,
    group_filters,
    reshape_group,
    serialize,
    sfs_conv,
    unflatten_columns,
)

# [(0,5),(2,7)] with m=4, one column, bit=2, wbit=4.  Header fields then the
# packed stream: words 0b010100 and 0b011110, LSB first -> 0x94 0x07.
GOLDEN_CSF1 = bytes.fromhex(
    "43534631" "0100" "04000000" "01000000" "02" "04" "0200000000000000" "9407"
)


def seq(values, m):
    return ColumnSequence(m, len(values) // m, values)


class TestFlatten:
    def test_single_column(self):
        g = reshape_group(group_filters(np.array([[[[3]]], [[[4]]]]), 2)[0])
        assert flatten_columns(g).values.tolist() == [3, 4]

    def test_hand_enumeration(self):
        o, i, r, c = np.indices((2, 1, 2, 2))
        w = o * 1000 + r * 10 + c
        cs = flatten_columns(reshape_group(group_filters(w, 2)[0]))
        assert cs.num_columns == 4
        assert cs.values.tolist() == [0, 1000, 1, 1001, 10, 1010, 11, 1011]
        assert cs.values.tolist() == column_major(w, 2)

    def test_round_trip(self):
        w = np.arange(4 * 3 * 3 * 3).reshape(4, 3, 3, 3)
        rg = reshape_group(group_filters(w, 4)[0])
        assert unflatten_columns(flatten_columns(rg), 3, 3) == rg


class TestEncode:
    def test_single_column(self):
        block = encode(seq([5, 0, 0, 7], 4), bit=2, wbit=4)
        assert block.entries == [CsfEntry(0, 5), CsfEntry(2, 7)]
        assert block.column_counts.tolist() == [2]

    def test_padding_across_columns(self):
        block = encode(seq([0, 0, 0, 0, 9, 0, 0, 0], 4), bit=2, wbit=4)
        assert block.entries == [CsfEntry(3, 0), CsfEntry(0, 9)]
        assert block.positions.tolist() == [3, 4]
        assert block.column_counts.tolist() == [1, 1]

    def test_dense_column(self):
        block = encode(seq([1, 2, 3, 4], 4), bit=1, wbit=3)
        assert block.entries == [CsfEntry(0, v) for v in (1, 2, 3, 4)]
        assert block.padding_count == 0

    def test_eight_zero_run(self):
        values = [0] * 8 + [1] + [0] * 3
        block = encode(seq(values, 4), bit=2, wbit=1)
        assert block.padding_count == 2 == 8 // 4
        assert block.entries == scan_encode(values, 2)

    def test_trailing_run_padding(self):
        # a long trailing run is broken too; the remainder is implicit
        values = [1] + [0] * 11
        block = encode(seq(values, 4), bit=2, wbit=1)
        assert block.entries == [(0, 1), (3, 0), (3, 0)]
        assert decode(block).values.tolist() == values

    def test_all_zero(self):
        block = encode(seq([0] * 8, 4), bit=4, wbit=2)
        assert len(block) == 0
        assert block.column_counts.tolist() == [0, 0]

    @pytest.mark.parametrize("bit, wbit", [(0, 4), (17, 4), (2, 0), (2, 33)])
    def test_width_bounds(self, bit, wbit):
        with pytest.raises(RangeError):
            encode(seq([1, 0], 2), bit, wbit)

    def test_code_too_wide(self):
        with pytest.raises(RangeError):
            encode(seq([4, 0], 2), 2, 2)

    def test_zero_weight_nonzero_code(self):
        book = QuantCodebook(2, [0.0, 0.0, 1.0, 2.0])
        with pytest.raises(EncodingError):
            encode(seq([1, 2], 2), 2, 2, book)
        assert encode(seq([3, 2], 2), 2, 2, book).codebook == book


class TestDecode:
    def test_inverse_example(self):
        block = CsfBlock(4, 1, 2, 4, [0, 2], [5, 7])
        assert decode(block, 4).values.tolist() == [5, 0, 0, 7]

    def test_empty(self):
        block = CsfBlock(4, 2, 3, 2, [], [])
        assert decode(block, 8).values.tolist() == [0] * 8

    def test_overrun(self):
        with pytest.raises(CorruptStream):
            CsfBlock(2, 1, 2, 2, [1, 1], [1, 1])

    def test_wrong_length(self):
        with pytest.raises(ShapeError):
            decode(CsfBlock(4, 1, 2, 4, [0], [5]), 5)

    @settings(max_examples=200, deadline=None)
    @given(
        m=st.sampled_from([1, 2, 4, 8, 64]),
        cols=st.integers(1, 40),
        bit=st.integers(1, 8),
        density=st.floats(0.0, 1.0),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_round_trip_against_scanner(self, m, cols, bit, density, seed):
        rng = np.random.default_rng(seed)
        values = np.where(rng.random(m * cols) < density, rng.integers(1, 16, m * cols), 0)
        block = encode(seq(values, m), bit, 4)
        assert block.entries == scan_encode(values.tolist(), bit)
        assert decode(block).values.tolist() == values.tolist()
        assert scan_decode(block.entries, values.size) == values.tolist()
        pos = block.positions
        assert np.all(np.diff(pos) > 0) and (pos.size == 0 or pos[-1] < values.size)


class TestColumnCounts:
    def test_example(self):
        assert build_column_counts([CsfEntry(3, 0), CsfEntry(0, 9)], 4, 2).tolist() == [1, 1]

    def test_no_entries(self):
        assert build_column_counts([], 4, 3).tolist() == [0, 0, 0]

    def test_dense(self):
        block = encode(seq([1, 2, 3, 4], 2), 1, 3)
        assert build_column_counts(block, 2, 2).tolist() == [2, 2]

    def test_overrun(self):
        with pytest.raises(CorruptStream):
            build_column_counts([5], 2, 2)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), bit=st.integers(1, 6))
    def test_identity(self, seed, bit):
        rng = np.random.default_rng(seed)
        values = np.where(rng.random(8 * 10) < 0.15, 1, 0)
        block = encode(seq(values, 8), bit, 1)
        counts = block.column_counts
        assert counts.sum() == len(block)
        occupied = set((block.positions // 8).tolist())
        assert [c > 0 for c in counts] == [i in occupied for i in range(10)]
        # entries of a column hold exactly that column's nonzeros
        for i in range(10):
            js, codes = block.column_entries(i)
            col = values[i * 8 : (i + 1) * 8]
            assert sorted(js[codes != 0].tolist()) == np.flatnonzero(col).tolist()


class TestSerialize:
    def test_golden(self):
        block = CsfBlock(4, 1, 2, 4, [0, 2], [5, 7])
        assert serialize(block) == GOLDEN_CSF1
        loaded = deserialize(GOLDEN_CSF1)
        assert loaded == block
        assert loaded.column_counts.tolist() == [2]
        assert decode(loaded).values.tolist() == [5, 0, 0, 7]

    def test_empty_block(self):
        data = serialize(CsfBlock(4, 3, 2, 4, [], []))
        assert len(data) == 24
        assert len(deserialize(data)) == 0

    def test_with_codebook(self):
        book = QuantCodebook(2, [0.0, -1.0, 0.5, 2.0])
        block = encode(seq([0, 3, 0, 0, 1, 2], 3), 1, 2, book)
        data = serialize(block)
        assert data[-(6 + 32) : -32][:4] == b"SFCB"
        assert deserialize(data) == block
        assert serialize(deserialize(data)) == data

    def test_overrun(self):
        bad = bytearray(GOLDEN_CSF1)
        bad[-2] = 0xD4  # second rel becomes 3 -> position 4 of 4
        with pytest.raises(CorruptStream):
            deserialize(bytes(bad))

    def test_entry_count_overrun(self):
        bad = bytearray(GOLDEN_CSF1)
        bad[16] = 5  # five entries cannot fit in four positions
        with pytest.raises(CorruptStream):
            deserialize(bytes(bad))

    @pytest.mark.parametrize(
        "mutate, field",
        [
            (lambda d: b"CSF2" + d[4:], "magic"),
            (lambda d: d[:4] + b"\x09\x00" + d[6:], "version"),
            (lambda d: d[:10], "header"),
            (lambda d: d[:-1], "entry stream length"),
            (lambda d: d[:-1] + b"\x17", "padding bits"),
            (lambda d: d + b"\x00", "header"),
        ],
    )
    def test_format_errors(self, mutate, field):
        with pytest.raises(FormatError) as exc:
            deserialize(mutate(GOLDEN_CSF1))
        assert exc.value.field == field

    @settings(max_examples=100, deadline=None)
    @given(
        m=st.sampled_from([1, 2, 4, 8]),
        cols=st.integers(1, 30),
        bit=st.integers(1, 16),
        wbit=st.integers(1, 32),
        density=st.floats(0, 1),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_bit_exact(self, m, cols, bit, wbit, density, seed):
        rng = np.random.default_rng(seed)
        top = min(1 << wbit, 2**31)
        values = np.where(rng.random(m * cols) < density, rng.integers(1, top, m * cols), 0)
        block = encode(seq(values, m), bit, wbit)
        data = serialize(block)
        assert len(data) == 24 + (len(block) * (bit + wbit) + 7) // 8
        again = deserialize(data)
        assert again == block
        assert serialize(again) == data


class TestLayer:
    def test_round_trip_and_conv(self):
        rng = np.random.default_rng(21)
        spec = LayerSpec(M=6, C=3, K=3, S=1, W=6, H=5, m=3)
        codes = np.where(rng.random(spec.filter_shape) < 0.3, rng.integers(1, 8, spec.filter_shape), 0)
        blocks = encode_layer(codes, 3, 2, 3)
        assert len(blocks) == 2
        decoded = decode_layer(blocks, 3, 3)
        np.testing.assert_array_equal(decoded, codes)
        v = rng.integers(-5, 6, spec.input_shape)
        np.testing.assert_array_equal(sfs_conv(decoded, v, spec).values, dense_conv(codes, v, spec).values)
