import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fblab import gf2
from fblab._numeric import GuardError, InputError
from fblab.dists import ParseError
from fblab.gf2 import (
    BitMatrix,
    coset_leader_weights,
    dump_bitmatrix,
    inverse,
    load_bitmatrix,
    parse_bitmatrix,
    rref,
    solve_affine,
    syndrome_table,
    syndrome_weight_counts,
)
from fblab.gf2 import _pykernels

try:
    from fblab.gf2 import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def random_matrix(seed, rows, cols):
    g = np.random.default_rng(seed)
    return BitMatrix.from_lists(g.integers(0, 2, size=(rows, cols)).tolist(), cols)


def matrices(max_rows=8, max_cols=10):
    return st.integers(1, max_cols).flatmap(
        lambda c: st.lists(st.integers(0, (1 << c) - 1), min_size=0, max_size=max_rows).map(
            lambda rows: BitMatrix.from_ints(rows, c)
        )
    )


def brute_syndromes(h: BitMatrix):
    return [h.apply(y) for y in range(1 << h.cols)]


class TestBitMatrix:
    def test_packing_little_endian(self):
        m = BitMatrix.from_lists([[1, 0, 1]])
        assert m.row_ints() == (0b101,)
        assert m.words[0, 0] == 5

    def test_multiword_rows(self):
        row = (1 << 100) | (1 << 63) | 1
        m = BitMatrix.from_ints([row], 130)
        assert m.nwords == 3
        assert m.words[0].tolist() == [(1 << 63) | 1, 1 << 36, 0]
        assert m.row_ints() == (row,)
        assert m[0, 100] == 1 and m[0, 99] == 0

    def test_bits_beyond_last_column_rejected(self):
        with pytest.raises(InputError):
            BitMatrix.from_ints([0b1000], 3)

    def test_ragged_and_non_bits(self):
        with pytest.raises(InputError):
            BitMatrix.from_lists([[1, 0], [1]])
        with pytest.raises(InputError):
            BitMatrix.from_lists([[1, 2]])

    def test_equality_and_hash(self):
        a = BitMatrix.from_lists([[1, 1], [0, 1]])
        b = BitMatrix.from_ints([3, 2], 2)
        assert a == b and hash(a) == hash(b)
        assert a != BitMatrix.from_ints([3, 2], 3)

    def test_columns_and_transpose(self):
        m = BitMatrix.from_lists([[1, 0, 1], [0, 1, 1]])
        assert m.col_ints() == (0b01, 0b10, 0b11)
        assert m.transpose().to_lists() == [[1, 0], [0, 1], [1, 1]]

    def test_apply_matches_matmul(self):
        m = random_matrix(0, 5, 9)
        for y in range(0, 512, 37):
            col = BitMatrix.from_ints([(y >> j) & 1 for j in range(9)], 1)
            prod = m @ col
            assert m.apply(y) == sum(b << i for i, (b,) in enumerate(prod.to_lists()))

    def test_vstack_take_rows(self):
        a, b = random_matrix(1, 2, 4), random_matrix(2, 3, 4)
        s = a.vstack(b)
        assert s.rows == 5 and s.take_rows([2, 3, 4]) == b

    def test_zero_rows(self):
        z = BitMatrix.zeros(0, 5)
        assert z.shape == (0, 5) and z.rank() == 0 and z.apply(31) == 0


class TestLinearAlgebra:
    def test_identity_inverse(self):
        assert inverse(BitMatrix.identity(7)) == BitMatrix.identity(7)

    def test_singular(self):
        with pytest.raises(InputError, match="singular"):
            inverse(BitMatrix.from_lists([[1, 1], [1, 1]]))
        with pytest.raises(InputError):
            inverse(BitMatrix.zeros(2, 3))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 10 ** 6))
    def test_inverse_round_trip(self, n, seed):
        m = random_matrix(seed, n, n)
        if m.rank() < n:
            with pytest.raises(InputError):
                inverse(m)
            return
        inv = inverse(m)
        assert m @ inv == BitMatrix.identity(n) == inv @ m

    @settings(max_examples=60, deadline=None)
    @given(matrices())
    def test_rref_properties(self, m):
        for rtl in (False, True):
            red, piv = rref(m, right_to_left=rtl)
            assert len(piv) == m.rank()
            rows = red.row_ints()
            for i, c in enumerate(piv):
                # pivot column is a unit vector within the reduced rows
                assert [(r >> c) & 1 for r in rows] == [int(j == i) for j in range(len(rows))]
                if rtl:
                    assert rows[i].bit_length() - 1 == c
            assert all(r == 0 for r in rows[len(piv):])

    @settings(max_examples=60, deadline=None)
    @given(matrices(max_rows=6, max_cols=8), st.integers(0, 63))
    def test_solve_affine_brute_force(self, m, target):
        target &= (1 << m.rows) - 1
        x = solve_affine(m, target)
        solvable = any(m.apply(y) == target for y in range(1 << m.cols))
        assert (x is not None) == solvable
        if x is not None:
            assert m.apply(x) == target


class TestTextFormat:
    def test_round_trip(self, tmp_path):
        m = random_matrix(3, 4, 9)
        assert parse_bitmatrix(dump_bitmatrix(m)) == m
        p = tmp_path / "h.txt"
        p.write_text(dump_bitmatrix(m))
        assert load_bitmatrix(p) == m

    def test_comments_and_spaces(self):
        m = parse_bitmatrix("# code\nbitmatrix 2 3\n1 0 1\n011  # second\n")
        assert m.to_strings() == ["101", "011"]

    def test_errors_name_line(self):
        with pytest.raises(ParseError) as exc:
            parse_bitmatrix("bitmatrix 2 3\n101\n1x1\n")
        assert exc.value.line == 3
        with pytest.raises(ParseError, match="expected 2 rows"):
            parse_bitmatrix("bitmatrix 2 3\n101\n")
        with pytest.raises(ParseError):
            parse_bitmatrix("matrix 1 1\n1\n")
        with pytest.raises(ParseError):
            parse_bitmatrix("")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_bitmatrix(tmp_path / "none")


class TestKernels:
    @pytest.mark.parametrize("seed,k,n", [(0, 1, 1), (1, 3, 6), (2, 4, 10), (3, 6, 12)])
    def test_against_brute_force(self, seed, k, n):
        h = random_matrix(seed, k, n)
        syn = syndrome_table(h)
        assert syn.tolist() == brute_syndromes(h)
        counts = syndrome_weight_counts(h, syn)
        leaders = coset_leader_weights(h, syn)
        want = np.zeros((1 << k, n + 1), dtype=np.int64)
        for y, s in enumerate(brute_syndromes(h)):
            want[s, bin(y).count("1")] += 1
        assert counts.tolist() == want.tolist()
        for s in range(1 << k):
            nz = np.nonzero(want[s])[0]
            assert leaders[s] == (nz[0] if len(nz) else n + 1)

    def test_hamming_code_leaders(self):
        # [7,4] Hamming parity check: every nonzero syndrome has a weight-1 leader.
        h = BitMatrix.from_ints([0b1010101, 0b1100110, 0b1111000], 7)
        assert coset_leader_weights(h).tolist() == [0] + [1] * 7

    def test_guard(self):
        with pytest.raises(GuardError):
            syndrome_table(BitMatrix.zeros(1, gf2.MAX_ENUM_BITS + 1))

    @needs_compiled
    @pytest.mark.parametrize("seed", range(8))
    def test_compiled_matches_fallback(self, seed):
        g = np.random.default_rng(seed)
        n = int(g.integers(1, 15))
        k = int(g.integers(0, min(n, 8) + 1))
        h = random_matrix(seed + 100, k, n)
        cols = np.array(h.col_ints(), dtype=np.uint64)
        a = compiled.syndrome_table(cols, n)
        b = _pykernels.syndrome_table(cols, n)
        assert np.array_equal(a, b)
        assert np.array_equal(compiled.syndrome_weight_counts(a, n, k), _pykernels.syndrome_weight_counts(b, n, k))
        assert np.array_equal(compiled.coset_leader_weights(a, n, k), _pykernels.coset_leader_weights(b, n, k))

    def test_backend_selection(self):
        assert gf2.BACKEND in ("compiled", "python")
        if compiled is not None:
            assert gf2.BACKEND == "compiled"

    def test_pure_env_forces_fallback(self):
        env = dict(os.environ, FBLAB_PURE="1")
        out = subprocess.run(
            [sys.executable, "-c", "import fblab.gf2 as g; print(g.BACKEND)"],
            env=env, capture_output=True, text=True, check=True,
        )
        assert out.stdout.strip() == "python"
