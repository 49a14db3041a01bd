"""Target functions, input-space partitions and the computability test.

Tuples (o_1, ..., o_L) are indexed by the integer with o_1 as most
significant bit, matching :class:`cdmacompute.gf2.BitVector` packing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import BitMatrix, BitVector, DimensionError, rank

MAX_L = 20


class NotCosetConstant(ValueError):
    """Raised when a function takes two values on one coset."""

    def __init__(self, x: int, y: int, L: int, func: int):
        self.pair = (BitVector(L, x), BitVector(L, y))
        self.func = func
        super().__init__(
            f"f_{func + 1} differs on {self.pair[0]} and {self.pair[1]} of the same coset"
        )


def all_tuples(L: int) -> np.ndarray:
    """The 2^L input tuples as rows, in index order."""
    idx = np.arange(1 << L)
    return ((idx[:, None] >> np.arange(L - 1, -1, -1)) & 1).astype(np.uint8)


@dataclass(frozen=True)
class TruthTable:
    L: int
    values: np.ndarray  # shape (b, 2**L), uint8

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.uint8)
        if v.ndim == 1:
            v = v[None, :]
        if v.shape[1] != 1 << self.L:
            raise ValueError(f"each function needs {1 << self.L} values, got {v.shape[1]}")
        if np.any(v > 1):
            raise ValueError("truth table entries must be bits")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def b(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_callable(cls, L: int, *funcs) -> "TruthTable":
        X = all_tuples(L)
        vals = [[int(f(*row)) & 1 for row in X.tolist()] for f in funcs]
        return cls(L, np.array(vals, dtype=np.uint8))

    @classmethod
    def constant(cls, L: int, value: int, b: int = 1) -> "TruthTable":
        return cls(L, np.full((b, 1 << L), value, dtype=np.uint8))

    @classmethod
    def projections(cls, L: int) -> "TruthTable":
        return cls(L, all_tuples(L).T.copy())

    def __call__(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.values[:, index])

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Outputs for rows of tuples ``X`` (shape (..., L)); result (..., b)."""
        X = np.asarray(X, dtype=np.int64)
        idx = X @ (1 << np.arange(self.L - 1, -1, -1))
        return self.values[:, idx].T.reshape(X.shape[:-1] + (self.b,))

    def __eq__(self, other):
        return (
            isinstance(other, TruthTable)
            and self.L == other.L
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.L, self.values.tobytes()))


@dataclass(frozen=True)
class Partition:
    L: int
    class_of: tuple[int, ...]
    num_classes: int

    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_classes)]
        for x, c in enumerate(self.class_of):
            out[c].append(x)
        return out

    def class_tuples(self) -> list[list[tuple[int, ...]]]:
        return [[BitVector(self.L, x).to_tuple() for x in cls] for cls in self.classes()]

    def refines(self, other: "Partition") -> bool:
        """True if every class of ``self`` lies inside one class of ``other``."""
        seen: dict[int, int] = {}
        for a, b in zip(self.class_of, other.class_of):
            if seen.setdefault(a, b) != b:
                return False
        return True

    @classmethod
    def singletons(cls, L: int) -> "Partition":
        return cls(L, tuple(range(1 << L)), 1 << L)


def _from_keys(L: int, keys) -> Partition:
    # classes numbered in order of their smallest member
    ids: dict = {}
    class_of = []
    for key in keys:
        class_of.append(ids.setdefault(key, len(ids)))
    return Partition(L, tuple(class_of), len(ids))


def _check_L(H: BitMatrix) -> int:
    if H.ncols > MAX_L:
        raise ValueError(f"L={H.ncols} exceeds the exhaustive limit of {MAX_L}")
    return H.ncols


def _integer_products(H: BitMatrix) -> np.ndarray:
    L = _check_L(H)
    return all_tuples(L).astype(np.int64) @ H.to_array().T.astype(np.int64)


def coset_partition(H: BitMatrix) -> Partition:
    prods = _integer_products(H) % 2
    return _from_keys(H.ncols, map(bytes, prods.astype(np.uint8)))


def real_sum_partition(H: BitMatrix) -> Partition:
    prods = _integer_products(H)
    return _from_keys(H.ncols, map(tuple, prods.tolist()))


def find_violation(P: Partition, f: TruthTable) -> tuple[int, int, int] | None:
    """First ``(x, y, i)`` with x, y in one class and f_i(x) != f_i(y).

    Classes are scanned in canonical order; x is the smallest member of the
    first offending class and y the smallest member disagreeing with it.
    """
    if P.L != f.L:
        raise DimensionError(f"partition has L={P.L}, function has L={f.L}")
    for members in P.classes():
        rep = members[0]
        for x in members[1:]:
            diff = np.nonzero(f.values[:, rep] != f.values[:, x])[0]
            if diff.size:
                return rep, x, int(diff[0])
    return None


def is_constant_on(P: Partition, f: TruthTable):
    """Returns ``(ok, witness)``; witness is the first offending pair of tuples."""
    hit = find_violation(P, f)
    if hit is None:
        return True, None
    x, y, _ = hit
    return False, (BitVector(P.L, x), BitVector(P.L, y))


def count_computable(P: Partition, b: int = 1) -> int:
    return (2 ** P.num_classes) ** b


def coset_lookup(H: BitMatrix, f: TruthTable) -> dict[BitVector, tuple[int, ...]]:
    """Map each achievable syndrome Hx to (f_1(x), ..., f_b(x))."""
    if f.L != H.ncols:
        raise DimensionError(f"H has {H.ncols} columns, function has L={f.L}")
    P = coset_partition(H)
    hit = find_violation(P, f)
    if hit is not None:
        raise NotCosetConstant(hit[0], hit[1], f.L, hit[2])
    table: dict[BitVector, tuple[int, ...]] = {}
    prods = _integer_products(H) % 2
    for x, row in enumerate(prods.tolist()):
        s = BitVector.from_bits(row)
        if s not in table:
            table[s] = f(x)
    assert len(table) == 2 ** rank(H)
    return table


def lookup_array(H: BitMatrix, f: TruthTable) -> np.ndarray:
    """Dense form of :func:`coset_lookup`: shape (2^r, b), -1 for unreachable syndromes."""
    table = coset_lookup(H, f)
    out = np.full((1 << H.nrows, f.b), -1, dtype=np.int8)
    for s, vals in table.items():
        out[s.bits] = vals
    return out


# -- text format ------------------------------------------------------------

def parse_truth_table(text: str) -> TruthTable:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise ValueError("empty truth table")
    if all(line.startswith("tt:") for _, line in lines):
        funcs = []
        for lineno, line in lines:
            bits = line[3:].strip()
            if not bits or set(bits) - {"0", "1"}:
                raise ValueError(f"line {lineno}: bad bitstring {bits!r}")
            funcs.append([int(c) for c in bits])
        size = len(funcs[0])
        L = size.bit_length() - 1
        if 1 << L != size or any(len(fn) != size for fn in funcs):
            raise ValueError("compact truth tables must all have the same power-of-two length")
        return TruthTable(L, np.array(funcs, dtype=np.uint8))
    lineno, header = lines[0]
    try:
        L, b = (int(t) for t in header.split())
    except ValueError:
        raise ValueError(f"line {lineno}: expected header 'L b'") from None
    if not 1 <= L <= MAX_L or b < 1:
        raise ValueError(f"line {lineno}: invalid L={L} or b={b}")
    body = lines[1:]
    if len(body) != 1 << L:
        raise ValueError(f"expected {1 << L} rows after header, got {len(body)}")
    vals = np.zeros((b, 1 << L), dtype=np.uint8)
    for x, (lineno, line) in enumerate(body):
        toks = line.split()
        if len(toks) != b or any(t not in ("0", "1") for t in toks):
            raise ValueError(f"line {lineno}: expected {b} bits")
        vals[:, x] = [int(t) for t in toks]
    return TruthTable(L, vals)


def format_truth_table(f: TruthTable) -> str:
    lines = [f"{f.L} {f.b}"]
    lines += [" ".join(str(int(v)) for v in f.values[:, x]) for x in range(1 << f.L)]
    return "\n".join(lines) + "\n"


def load_truth_table(path) -> TruthTable:
    with open(path) as fh:
        return parse_truth_table(fh.read())
