import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmacompute.gf2 import (
    BitMatrix,
    BitVector,
    DimensionError,
    format_matrix,
    mul,
    null_space,
    parse_matrix,
    random_matrix,
    rank,
    solve_affine,
    span_array,
    stack,
)


def bv(*bits):
    return BitVector.from_bits(bits)


@st.composite
def matrices(draw, max_rows=6, max_cols=10):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    bits = draw(st.lists(st.integers(0, 1), min_size=r * c, max_size=r * c))
    return BitMatrix.from_array(np.array(bits).reshape(r, c))


def test_mul_examples(H1):
    assert mul(H1, bv(1, 1, 1)) == bv(0, 0)
    assert mul(BitMatrix.identity(3), bv(1, 0, 1)) == bv(1, 0, 1)
    assert mul(H1, bv(1, 0, 0)) == bv(1, 1)
    assert mul(H1, bv(0, 1, 1)) == bv(1, 1)


def test_mul_dimension_mismatch(H1):
    with pytest.raises(DimensionError):
        mul(H1, bv(1, 0))


def test_rank_examples(H1):
    assert rank(H1) == 2
    assert rank(BitMatrix.zeros(2, 3)) == 0
    assert rank(BitMatrix.identity(4)) == 4


def test_null_space_examples(H1):
    assert null_space(H1) == [bv(1, 1, 1)]
    assert null_space(BitMatrix.identity(3)) == []
    assert len(null_space(BitMatrix.zeros(2, 3))) == 3


def test_solve_affine_examples(H1):
    part, basis = solve_affine(H1, bv(1, 1))
    assert part == bv(1, 0, 0)
    assert basis == [bv(1, 1, 1)]
    part, basis = solve_affine(BitMatrix.identity(3), bv(0, 1, 0))
    assert part == bv(0, 1, 0) and basis == []
    assert solve_affine(BitMatrix.from_rows([[1, 1], [1, 1]]), bv(0, 1)) is None


def test_stack_examples(rng):
    A, B = random_matrix(2, 4, rng), random_matrix(2, 4, rng)
    S = stack([A, B])
    assert S.shape == (4, 4)
    assert S.rows == A.rows + B.rows
    assert stack([BitMatrix.identity(2)]) == BitMatrix.identity(2)
    with pytest.raises(DimensionError):
        stack([A, BitMatrix.identity(3)])


def test_random_matrix_deterministic():
    assert random_matrix(5, 7, 42) == random_matrix(5, 7, 42)
    assert random_matrix(5, 7, 42) != random_matrix(5, 7, 43)


def test_random_matrix_fair_coin():
    M = random_matrix(100, 1000, 7).to_array()
    assert abs(M.mean() - 0.5) < 0.01


def _full_rank_probability(n):
    return float(np.prod([1 - 2.0 ** (-i) for i in range(1, n + 1)]))


def test_full_rank_formula_matches_enumeration():
    # brute-force oracle for the product formula on 3x3
    full = sum(
        rank(BitMatrix.from_array(np.array(bits).reshape(3, 3))) == 3
        for bits in itertools.product((0, 1), repeat=9)
    )
    assert full == 168
    assert full / 512 == pytest.approx(_full_rank_probability(3))


def test_random_16x16_full_rank_rate():
    hits = sum(rank(random_matrix(16, 16, seed)) == 16 for seed in range(2000))
    expected = _full_rank_probability(16)
    assert expected == pytest.approx(0.289, abs=1e-3)
    assert abs(hits / 2000 - expected) < 0.05


def _all_vectors(n):
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int64)


@pytest.mark.parametrize("cols", [1, 4, 7, 10])
def test_linearity_exhaustive(cols):
    M = random_matrix(5, cols, cols)
    table = np.array([mul(M, BitVector(cols, x)).bits for x in range(1 << cols)])
    a = np.arange(1 << cols)
    assert np.array_equal(table[a[:, None] ^ a[None, :]], table[:, None] ^ table[None, :])


@given(matrices(), st.data())
def test_linearity_random(M, data):
    a = BitVector(M.ncols, data.draw(st.integers(0, (1 << M.ncols) - 1)))
    b = BitVector(M.ncols, data.draw(st.integers(0, (1 << M.ncols) - 1)))
    assert mul(M, a ^ b) == mul(M, a) ^ mul(M, b)


@pytest.mark.parametrize("shape", [(3, 6), (5, 12), (8, 12), (2, 9)])
def test_solution_sets_exhaustive(shape):
    M = random_matrix(*shape, sum(shape))
    X = _all_vectors(M.ncols)
    synd = X @ M.to_array().T.astype(np.int64) % 2
    synd_idx = synd @ (1 << np.arange(M.nrows - 1, -1, -1))
    r = rank(M)
    for s in range(1 << M.nrows):
        sol = solve_affine(M, BitVector(M.nrows, s))
        brute = X[synd_idx == s]
        if sol is None:
            assert len(brute) == 0
            continue
        part, basis = sol
        got = span_array(part, basis)
        assert len(got) == 2 ** (M.ncols - r)
        assert np.array_equal(got, brute)  # both in lexicographic order


@given(matrices(), matrices())
def test_rank_of_stack(A, B):
    if A.ncols != B.ncols:
        return
    assert rank(stack([A, B])) >= max(rank(A), rank(B))


@given(matrices())
@settings(max_examples=50)
def test_null_space_dimension(M):
    basis = null_space(M)
    assert len(basis) == M.ncols - rank(M)
    assert all(mul(M, v).bits == 0 for v in basis)


def test_inputs_not_mutated(H1):
    before = H1.rows
    rank(H1), null_space(H1), solve_affine(H1, bv(1, 0))
    assert H1.rows == before


def test_text_format_round_trip():
    text = "# parity checks\n1 1 0\n1 0 1  # second row\n\n"
    M = parse_matrix(text)
    assert M == BitMatrix.from_rows([[1, 1, 0], [1, 0, 1]])
    assert parse_matrix(format_matrix(M)) == M
    assert parse_matrix("1 0\n0 1") == BitMatrix.identity(2)


@pytest.mark.parametrize("bad", ["1 2\n", "1 0\n1\n", "", "# only\n"])
def test_text_format_errors(bad):
    with pytest.raises(ValueError):
        parse_matrix(bad)


def test_bitvector_basics():
    v = bv(1, 0, 1, 1)
    assert list(v) == [1, 0, 1, 1]
    assert v[0] == 1 and v[-1] == 1 and v.weight() == 3
    with pytest.raises(ValueError):
        BitVector(2, 4)
