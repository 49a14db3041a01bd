"""Joint binary sources, sampling and entropy quantities."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .function_space import TruthTable, all_tuples
from .gf2 import BitMatrix, DimensionError

PMF_TOL = 1e-12


@dataclass(frozen=True)
class JointPmf:
    """Distribution over {0,1}^L, indexed with the first variable as MSB."""

    L: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size != 1 << self.L:
            raise ValueError(f"need {1 << self.L} probabilities, got {p.size}")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"probabilities sum to {p.sum():.15g}, not 1")
        # x / x == 1 exactly, so a single-support pmf holds exactly 1.0
        p = p / p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, L: int) -> "JointPmf":
        return cls(L, np.full(1 << L, 1.0 / (1 << L)))

    @classmethod
    def point(cls, L: int, index: int) -> "JointPmf":
        p = np.zeros(1 << L)
        p[index] = 1.0
        return cls(L, p)

    def marginal(self, keep: Sequence[int]) -> "JointPmf":
        """Marginal on the variables ``keep`` (0-based, in the given order)."""
        X = all_tuples(self.L)
        sub = X[:, list(keep)].astype(np.int64) @ (1 << np.arange(len(keep) - 1, -1, -1))
        out = np.bincount(sub, weights=self.probs, minlength=1 << len(keep))
        return JointPmf(len(keep), out)

    def __eq__(self, other):
        return isinstance(other, JointPmf) and self.L == other.L and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.L, self.probs.tobytes()))


@dataclass(frozen=True)
class BscStar:
    """One binary source S seen through independent binary symmetric channels."""

    q: tuple[float, ...]
    source_bias: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        for x in (self.source_bias, *self.q):
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"parameter {x} outside [0, 1]")
        if not self.q:
            raise ValueError("need at least one crossover probability")

    @property
    def L(self) -> int:
        return len(self.q)

    def pmf(self) -> JointPmf:
        return bsc_star_pmf(self)


def bsc_star_pmf(m: BscStar) -> JointPmf:
    X = all_tuples(m.L).astype(float)
    q = np.array(m.q)
    out = np.zeros(X.shape[0])
    for s, ps in ((0, 1.0 - m.source_bias), (1, m.source_bias)):
        flip = X != s
        out += ps * np.prod(np.where(flip, q, 1.0 - q), axis=1)
    return JointPmf(m.L, out / out.sum())


def agreement(q_a: float, q_b: float) -> float:
    """P(O_a = O_b) under the BSC-star model."""
    return (1 - q_a) * (1 - q_b) + q_a * q_b


def sample(p: JointPmf, k: int, rng) -> np.ndarray:
    """``k`` i.i.d. draws as a (k, L) uint8 array, by inverse CDF."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    cdf = np.cumsum(p.probs)
    u = rng.random(k) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, cdf.size - 1)
    return all_tuples(p.L)[idx]


def pushforward(p: JointPmf, H: BitMatrix) -> JointPmf:
    if H.ncols != p.L:
        raise DimensionError(f"H has {H.ncols} columns, pmf has L={p.L}")
    X = all_tuples(p.L).astype(np.int64)
    V = (X @ H.to_array().T.astype(np.int64)) % 2
    idx = V @ (1 << np.arange(H.nrows - 1, -1, -1))
    return JointPmf(H.nrows, np.bincount(idx, weights=p.probs, minlength=1 << H.nrows))


def v_joint(p: JointPmf, H: BitMatrix) -> JointPmf:
    """Law of (V_1, ..., V_r) with V = H O over GF(2)."""
    return pushforward(p, H)


def _entropy_of(probs) -> float:
    probs = np.asarray(probs, dtype=float)
    nz = probs[probs > 0]
    # a point mass stored as 1 + ulp would otherwise give -0.0 or a tiny negative
    return max(0.0, float(-(nz * np.log2(nz)).sum()))


def entropy(p: JointPmf) -> float:
    return _entropy_of(p.probs)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{x} is not a probability")
    return _entropy_of([x, 1.0 - x])


def conditional_entropy(p: JointPmf, target: Sequence[int], given: Sequence[int] = ()) -> float:
    """H(X_target | X_given) with 0-based variable indices."""
    target, given = list(target), list(given)
    if not target:
        return 0.0
    both = p.marginal(given + [i for i in target if i not in given])
    # the difference of two entropies can dip a few ulps below zero
    return max(0.0, entropy(both) - (entropy(p.marginal(given)) if given else 0.0))


def marginal_entropies(p: JointPmf) -> list[float]:
    return [entropy(p.marginal([i])) for i in range(p.L)]


def function_pmf(p: JointPmf, f: TruthTable) -> JointPmf:
    """Law of (U_1, ..., U_b) = f(O)."""
    if p.L != f.L:
        raise DimensionError(f"pmf has L={p.L}, function has L={f.L}")
    idx = f.values.T.astype(np.int64) @ (1 << np.arange(f.b - 1, -1, -1))
    return JointPmf(f.b, np.bincount(idx, weights=p.probs, minlength=1 << f.b))


def joint_function_entropy(p: JointPmf, f: TruthTable) -> float:
    return entropy(function_pmf(p, f))


def subsets(r: int):
    for size in range(1, r + 1):
        yield from combinations(range(r), size)


# -- text formats -------------------------------------------------------------

def parse_pmf(text: str) -> JointPmf:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise ValueError("empty pmf file")
    lineno, head = lines[0]
    try:
        L = int(head)
    except ValueError:
        raise ValueError(f"line {lineno}: expected L") from None
    if L < 1:
        raise ValueError(f"line {lineno}: L must be positive")
    probs = np.zeros(1 << L)
    for lineno, line in lines[1:]:
        toks = line.split()
        bits = "".join(toks[:-1])
        if len(bits) != L or set(bits) - {"0", "1"}:
            raise ValueError(f"line {lineno}: expected {L} bits then a probability")
        try:
            probs[int(bits, 2)] += float(toks[-1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad probability {toks[-1]!r}") from None
    return JointPmf(L, probs)


def format_pmf(p: JointPmf) -> str:
    lines = [str(p.L)]
    for x, pr in enumerate(p.probs):
        if pr > 0:
            lines.append(f"{x:0{p.L}b} {float(pr)!r}")
    return "\n".join(lines) + "\n"


def parse_bsc_star_config(text: str) -> BscStar:
    """``key = value`` lines with ``source_bias`` and ``q = [q1, q2, ...]``."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key] = value
    if "q" not in cfg:
        raise ValueError("BSC-star config needs a 'q' entry")
    q = [float(x) for x in re.split(r"[,\s;]+", cfg["q"].strip("[] ")) if x]
    return BscStar(tuple(q), float(cfg.get("source_bias", 0.5)))


def parse_source_spec(spec: str) -> JointPmf:
    """Resolve a CLI source argument: a pmf file, a BSC-star config file, or
    an inline ``bsc-star:q=0,0.1,0.2[;source_bias=0.5]``."""
    if spec.startswith("bsc-star:"):
        fields = {}
        for part in spec[len("bsc-star:"):].split(";"):
            if part.strip():
                key, _, value = part.partition("=")
                fields[key.strip()] = value.strip()
        if "q" not in fields:
            raise ValueError("inline bsc-star source needs q=...")
        q = tuple(float(x) for x in fields["q"].strip("[]").split(",") if x)
        return BscStar(q, float(fields.get("source_bias", fields.get("bias", 0.5)))).pmf()
    with open(spec) as fh:
        text = fh.read()
    if re.search(r"^\s*q\s*=", text, flags=re.M):
        return parse_bsc_star_config(text).pmf()
    return parse_pmf(text)


def load_pmf(path) -> JointPmf:
    with open(path) as fh:
        return parse_pmf(fh.read())
