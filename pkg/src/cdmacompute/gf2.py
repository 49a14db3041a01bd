"""Dense GF(2) linear algebra on bit-packed rows.

Rows and vectors are stored as Python ints. Element 0 is the most significant
bit, so a vector of observations (o_1, ..., o_L) packs to the same integer that
indexes a truth table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _pack(bits: Iterable[int]) -> tuple[int, int]:
    value = 0
    n = 0
    for b in bits:
        b = int(b)
        if b not in (0, 1):
            raise ValueError(f"entry {b!r} is not a bit")
        value = (value << 1) | b
        n += 1
    return value, n


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class BitVector:
    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 0 or self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits {self.bits:#x} do not fit in length {self.n}")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        value, n = _pack(bits)
        return cls(n, value)

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n, 0)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, j: int) -> int:
        if j < 0:
            j += self.n
        if not 0 <= j < self.n:
            raise IndexError(j)
        return (self.bits >> (self.n - 1 - j)) & 1

    def __iter__(self):
        for j in range(self.n):
            yield (self.bits >> (self.n - 1 - j)) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise DimensionError(f"length mismatch {self.n} vs {other.n}")
        return BitVector(self.n, self.bits ^ other.bits)

    def weight(self) -> int:
        return bin(self.bits).count("1")

    def to_tuple(self) -> tuple[int, ...]:
        return tuple(self)

    def to_array(self) -> np.ndarray:
        return np.fromiter(self, dtype=np.uint8, count=self.n)

    def __repr__(self) -> str:
        return f"BitVector({''.join(map(str, self)) or '-'})"


@dataclass(frozen=True)
class BitMatrix:
    """Binary matrix; ``rows`` holds one packed int per row."""

    nrows: int
    ncols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.nrows < 1 or self.ncols < 1:
            raise ValueError("matrix must have at least one row and one column")
        if len(self.rows) != self.nrows:
            raise ValueError("row count does not match data")
        for r in self.rows:
            if r < 0 or r >> self.ncols:
                raise ValueError(f"row {r:#x} does not fit in {self.ncols} columns")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        packed = []
        ncols = None
        for row in rows:
            value, n = _pack(row)
            if ncols is None:
                ncols = n
            elif n != ncols:
                raise DimensionError("ragged rows")
            packed.append(value)
        if ncols is None:
            raise ValueError("matrix must have at least one row")
        return cls(len(packed), ncols, tuple(packed))

    @classmethod
    def from_array(cls, a) -> "BitMatrix":
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_rows(a.tolist())

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << (n - 1 - i) for i in range(n)))

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls(nrows, ncols, (0,) * nrows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> (self.ncols - 1 - j)) & 1

    def row(self, i: int) -> BitVector:
        return BitVector(self.ncols, self.rows[i])

    def column(self, j: int) -> BitVector:
        return BitVector.from_bits(self[i, j] for i in range(self.nrows))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.ncols):
                out[i, j] = (r >> (self.ncols - 1 - j)) & 1
        return out

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array().T)

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            return mul(self, other)
        if isinstance(other, BitMatrix):
            return matmul(self, other)
        return NotImplemented

    def __str__(self) -> str:
        return format_matrix(self)


def mul(M: BitMatrix, v: BitVector) -> BitVector:
    if v.n != M.ncols:
        raise DimensionError(f"vector length {v.n} != matrix columns {M.ncols}")
    out = 0
    for r in M.rows:
        out = (out << 1) | _parity(r & v.bits)
    return BitVector(M.nrows, out)


def matmul(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    if A.ncols != B.nrows:
        raise DimensionError(f"inner dimensions {A.ncols} and {B.nrows} differ")
    rows = []
    for a in A.rows:
        acc = 0
        for j in range(A.ncols):
            if (a >> (A.ncols - 1 - j)) & 1:
                acc ^= B.rows[j]
        rows.append(acc)
    return BitMatrix(A.nrows, B.ncols, tuple(rows))


def _rref(rows: list[int], ncols: int, extra: list[int] | None = None):
    """Reduced row echelon form in place; returns pivot columns.

    ``extra`` carries one augmented bit per row and is updated alongside.
    """
    pivots = []
    pr = 0
    for col in range(ncols):
        mask = 1 << (ncols - 1 - col)
        sel = next((i for i in range(pr, len(rows)) if rows[i] & mask), None)
        if sel is None:
            continue
        rows[pr], rows[sel] = rows[sel], rows[pr]
        if extra is not None:
            extra[pr], extra[sel] = extra[sel], extra[pr]
        for i in range(len(rows)):
            if i != pr and rows[i] & mask:
                rows[i] ^= rows[pr]
                if extra is not None:
                    extra[i] ^= extra[pr]
        pivots.append(col)
        pr += 1
        if pr == len(rows):
            break
    return pivots


def rank(M: BitMatrix) -> int:
    return len(_rref(list(M.rows), M.ncols))


def null_space(M: BitMatrix) -> list[BitVector]:
    rows = list(M.rows)
    pivots = _rref(rows, M.ncols)
    n = M.ncols
    free = [c for c in range(n) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = 1 << (n - 1 - fc)
        for i, pc in enumerate(pivots):
            if (rows[i] >> (n - 1 - fc)) & 1:
                v |= 1 << (n - 1 - pc)
        basis.append(BitVector(n, v))
    return basis


def solve_affine(M: BitMatrix, s: BitVector) -> tuple[BitVector, list[BitVector]] | None:
    """All solutions of ``M v = s``: a particular solution plus a null-space basis.

    Returns None when the system is inconsistent.
    """
    if s.n != M.nrows:
        raise DimensionError(f"syndrome length {s.n} != matrix rows {M.nrows}")
    rows = list(M.rows)
    extra = list(s)
    pivots = _rref(rows, M.ncols, extra)
    if any(extra[i] for i in range(len(pivots), len(rows))):
        return None
    n = M.ncols
    x = 0
    for i, pc in enumerate(pivots):
        if extra[i]:
            x |= 1 << (n - 1 - pc)
    return BitVector(n, x), null_space(M)


def span_array(particular: BitVector, basis: Sequence[BitVector]) -> np.ndarray:
    """Every vector of ``particular + span(basis)`` as rows, sorted lexicographically."""
    n = particular.n
    d = len(basis)
    p = particular.to_array()
    if d == 0:
        return p[None, :]
    coeffs = ((np.arange(1 << d)[:, None] >> np.arange(d - 1, -1, -1)) & 1).astype(np.uint8)
    B = np.array([b.to_array() for b in basis], dtype=np.uint8).reshape(d, n)
    out = (coeffs.astype(np.int64) @ B.astype(np.int64) % 2).astype(np.uint8) ^ p
    order = np.lexsort(out.T[::-1])
    return out[order]


def stack(Ms: Sequence[BitMatrix]) -> BitMatrix:
    if not Ms:
        raise ValueError("nothing to stack")
    ncols = Ms[0].ncols
    if any(M.ncols != ncols for M in Ms):
        raise DimensionError("all matrices must share the column count")
    rows = tuple(r for M in Ms for r in M.rows)
    return BitMatrix(len(rows), ncols, rows)


def random_matrix(nrows: int, ncols: int, rng=None) -> BitMatrix:
    """I.i.d. fair-coin entries. ``rng`` is a Generator or a seed."""
    if nrows < 1 or ncols < 1:
        raise ValueError("dimensions must be positive")
    a = _as_rng(rng).integers(0, 2, size=(nrows, ncols), dtype=np.uint8)
    return BitMatrix.from_array(a)


def random_full_rank(nrows: int, ncols: int, rng=None, max_tries: int = 10_000) -> BitMatrix:
    """Rejection-sample a uniform matrix of rank ``min(nrows, ncols)``."""
    rng = _as_rng(rng)
    target = min(nrows, ncols)
    for _ in range(max_tries):
        M = random_matrix(nrows, ncols, rng)
        if rank(M) == target:
            return M
    raise RuntimeError(f"no full-rank {nrows}x{ncols} matrix after {max_tries} draws")


# -- text format ------------------------------------------------------------

def parse_matrix(text: str) -> BitMatrix:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([int(tok) for tok in line.split()])
            _pack(rows[-1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if rows and len(rows[-1]) != len(rows[0]):
            raise ValueError(f"line {lineno}: expected {len(rows[0])} entries, got {len(rows[-1])}")
    if not rows:
        raise ValueError("no matrix rows found")
    return BitMatrix.from_rows(rows)


def format_matrix(M: BitMatrix) -> str:
    return "\n".join(" ".join(str(b) for b in M.row(i)) for i in range(M.nrows)) + "\n"


def load_matrix(path) -> BitMatrix:
    with open(path) as fh:
        return parse_matrix(fh.read())
