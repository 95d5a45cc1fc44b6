import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import column_major, count_runs, exhaustive_best_bit
from sfs_csf import (
    ColumnSequence,
    RangeError,
    ShapeError,
    ZeroRunHistogram,
    batch_size_sweep,
    encode,
    extra_space,
    nonzero_run_hist,
    optimize_bits,
    padding_count,
    zero_run_hist,
)
from sfs_csf.stats import best_batch, layer_zero_stat


class TestRunHistograms:
    def test_hand_count(self):
        s = [0, 0, 5, 0, 7, 0, 0, 0]
        assert zero_run_hist(s).counts == {1: 1, 2: 1, 3: 1}
        assert nonzero_run_hist(s).counts == {1: 2}
        assert zero_run_hist(s).max == 3

    def test_all_nonzero(self):
        assert zero_run_hist([1, 2, 3]).counts == {}
        assert nonzero_run_hist([1, 2, 3]).counts == {3: 1}

    def test_accepts_sequence(self):
        cs = ColumnSequence(2, 2, [0, 1, 0, 0])
        assert zero_run_hist(cs).counts == {1: 1, 2: 1}

    @given(st.lists(st.integers(0, 3), max_size=200))
    def test_conservation(self, s):
        zeros, nonzeros = zero_run_hist(s), nonzero_run_hist(s)
        nz = sum(1 for v in s if v)
        assert zeros.covered() + nz == len(s)
        assert nonzeros.covered() + (len(s) - nz) == len(s)
        assert zeros.counts == count_runs(s, True)
        assert nonzeros.counts == count_runs(s, False)

    def test_addition(self):
        a = ZeroRunHistogram({1: 2, 3: 1})
        b = ZeroRunHistogram({3: 2, 4: 1})
        assert (a + b).counts == {1: 2, 3: 3, 4: 1}


class TestOptimizeBits:
    def test_worked_example(self):
        res = optimize_bits(ZeroRunHistogram({5: 10}), nz_num=100, wbit=8)
        assert [res.table[b] for b in (1, 2, 3, 4)] == [280, 300, 300, 400]
        assert (res.bit, res.total_bits) == (1, 280)
        assert sorted(res.table) == list(range(1, 17))

    def test_no_zeros(self):
        res = optimize_bits(ZeroRunHistogram(), nz_num=37, wbit=4, max_bit=6)
        assert res.table == {b: 37 * b for b in range(1, 7)}
        assert res.bit == 1

    def test_tie_takes_smallest(self):
        # f(1) = 2 + 1*(1+1) = 4, f(2) = 4 + 0 = 4, f(3) = 6
        res = optimize_bits(ZeroRunHistogram({2: 1}), nz_num=2, wbit=1)
        assert res.table[1] == res.table[2] == 4 < res.table[3]
        assert res.bit == 1

    def test_max_bit_bound(self):
        with pytest.raises(RangeError):
            optimize_bits(ZeroRunHistogram(), 1, 1, max_bit=0)

    @settings(max_examples=100, deadline=None)
    @given(
        runs=st.dictionaries(st.integers(1, 300), st.integers(1, 50), max_size=20),
        nz=st.integers(0, 5000),
        wbit=st.integers(1, 16),
    )
    def test_matches_exhaustive(self, runs, nz, wbit):
        res = optimize_bits(ZeroRunHistogram(runs), nz, wbit)
        assert (res.bit, res.total_bits) == exhaustive_best_bit(runs, nz, wbit)
        assert res.total_bits == min(res.table.values())

    @settings(max_examples=100, deadline=None)
    @given(
        m=st.sampled_from([1, 4, 16]),
        cols=st.integers(1, 50),
        density=st.floats(0, 1),
        bit=st.integers(1, 8),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_padding_term_matches_encoder(self, m, cols, density, bit, seed):
        rng = np.random.default_rng(seed)
        values = np.where(rng.random(m * cols) < density, 1, 0)
        block = encode(ColumnSequence(m, cols, values), bit, 1)
        assert block.padding_count == padding_count(zero_run_hist(values), bit)


class TestExtraSpace:
    def test_formula(self):
        assert extra_space(100, 2, 3, 8) == 230

    def test_no_padding(self):
        assert extra_space(57, 3, 0, 8) == 171

    def test_negative(self):
        with pytest.raises(RangeError):
            extra_space(-1, 1, 0, 1)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), wbit=st.integers(1, 8))
    def test_chosen_bit_is_minimal(self, seed, wbit):
        rng = np.random.default_rng(seed)
        values = np.where(rng.random(400) < rng.random() * 0.5, 1, 0)
        hist, nz = zero_run_hist(values), int(values.sum())
        best = optimize_bits(hist, nz, wbit).bit
        cost = lambda b: extra_space(nz, b, encode(ColumnSequence(4, 100, values), b, wbit).padding_count, wbit)
        assert all(cost(best) <= cost(b) for b in range(1, 17))


def brute_sweep(codes, wbit, m):
    """Exhaustive storage for one batch size from plain loops."""
    M = codes.shape[0]
    hist, nz = {}, 0
    for n in range(M // m):
        flat = column_major(codes[n * m : (n + 1) * m].tolist(), m)
        nz += sum(1 for v in flat if v)
        for k, v in count_runs(flat, True).items():
            hist[k] = hist.get(k, 0) + v
    bit, f = exhaustive_best_bit(hist, nz, wbit)
    return bit, nz * wbit + f


class TestBatchSizeSweep:
    def test_single_candidate_matches_layer_pipeline(self):
        rng = np.random.default_rng(1)
        codes = np.where(rng.random((4, 2, 3, 3)) < 0.3, 3, 0)
        (row,) = batch_size_sweep(codes, 4, [4])
        hist, nz = layer_zero_stat(codes, 4)
        opt = optimize_bits(hist, nz, 4)
        assert (row.best_bit, row.total_bits) == (opt.bit, nz * 4 + opt.total_bits)

    def test_dense_is_independent_of_m(self):
        codes = np.ones((8, 3, 3, 3), dtype=int)
        rows = batch_size_sweep(codes, 5, [1, 2, 4, 8])
        assert {r.total_bits for r in rows} == {codes.size * 6}
        assert all(r.padding == 0 and r.best_bit == 1 for r in rows)

    def test_structured_sparsity_matches_brute_force(self):
        rng = np.random.default_rng(2)
        codes = np.zeros((8, 4, 3, 3), dtype=int)
        codes[::2] = rng.integers(1, 4, (4, 4, 3, 3)) * (rng.random((4, 4, 3, 3)) < 0.5)
        codes[1::4, 0] = 2
        rows = batch_size_sweep(codes, 3, [1, 2, 4, 8])
        for r in rows:
            assert (r.best_bit, r.total_bits) == brute_sweep(codes, 3, r.m)
        expected = min((brute_sweep(codes, 3, m)[1], m) for m in (1, 2, 4, 8))[1]
        assert best_batch(rows).m == expected

    def test_non_dividing(self):
        with pytest.raises(ShapeError):
            batch_size_sweep(np.ones((6, 1, 1, 1)), 2, [4])
