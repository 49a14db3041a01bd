"""Achievable-rate formulas, the BSC-star sweep and the XOR-function
comparison bound for fixed signatures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .codec import SignatureMatrix
from .function_space import TruthTable, all_tuples
from .gf2 import BitMatrix, DimensionError
from .source import (
    BscStar,
    JointPmf,
    agreement,
    binary_entropy,
    joint_function_entropy,
    marginal_entropies,
    v_joint,
)
from .sw_common import CapExceeded, claim2_upper
from .wrapped_channel import ChannelParams, capacity

INF = math.inf
VARIANTS = ("theorem", "explicit", "simulation", "nazer-gastpar")


@dataclass(frozen=True)
class BoundReport:
    variant: str
    c: float
    denominator: float
    N: int
    bound: float
    sigma: float | None = None
    sigma_eff: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.bound >= 0:
            raise ValueError("bound must be nonnegative")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.bound)


def fmt(x: float) -> str:
    """CSV number formatting: six decimals, ``inf`` for unbounded values."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def theorem_rate(c: float, N: int, denominator: float) -> float:
    """c / (N * denominator); infinite when nothing needs to be sent."""
    if N < 1:
        raise ValueError("N must be positive")
    if denominator < 0:
        raise ValueError("rate denominator must be nonnegative")
    if denominator == 0:
        return INF
    return c / (N * denominator)


def _resolve_c(H: BitMatrix, N: int, sigma: float | None, c: float | None):
    if c is not None:
        return c, None
    if sigma is None:
        raise ValueError("give either sigma or c")
    s_eff = ChannelParams(sigma, N, H.nrows).effective_sigma
    return capacity(s_eff), s_eff


def explicit_bound(
    source: JointPmf, H: BitMatrix, N: int, sigma: float | None = None, c: float | None = None
) -> BoundReport:
    """Rate with max_i H(V_i) as the denominator."""
    c, s_eff = _resolve_c(H, N, sigma, c)
    denom = max(marginal_entropies(v_joint(source, H)))
    return BoundReport("explicit", c, denom, N, theorem_rate(c, N, denom), sigma, s_eff)


def theorem_bound(
    source: JointPmf,
    H: BitMatrix,
    N: int,
    sigma: float | None = None,
    c: float | None = None,
    denominator: float | None = None,
) -> BoundReport:
    """Rate with the common-matrix SW rate replaced by ``claim2_upper`` (or an override)."""
    c, s_eff = _resolve_c(H, N, sigma, c)
    if denominator is None:
        denominator = claim2_upper(v_joint(source, H))
    return BoundReport("theorem", c, denominator, N, theorem_rate(c, N, denominator), sigma, s_eff)


def simulation_bound(p12: float, p13: float, c: float) -> float:
    """Closed form for the 3-user example with two parity rows and N = 2."""
    for p in (p12, p13):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{p} is not a probability")
    return theorem_rate(c, 2, max(binary_entropy(p12), binary_entropy(p13)))


def fig3_sweep(
    q2_grid: Sequence[float], q3_grid: Sequence[float], c: float, q1: float = 0.0
) -> list[tuple[float, float, float]]:
    """Bound over a (q2, q3) grid of BSC-star crossovers, q2 outermost."""
    rows = []
    for q2 in q2_grid:
        for q3 in q3_grid:
            rows.append((q2, q3, simulation_bound(agreement(q1, q2), agreement(q1, q3), c)))
    return rows


def bsc_star_explicit(q: Sequence[float], H: BitMatrix, c: float, N: int = 2, source_bias: float = 0.5) -> BoundReport:
    return explicit_bound(BscStar(tuple(q), source_bias).pmf(), H, N, c=c)


# -- XOR functions with fixed signatures ------------------------------------------

def xor_subsets(f: TruthTable) -> list[tuple[int, ...]] | None:
    """Inputs each f_i XORs together, or None if some f_i is not such an XOR."""
    X = all_tuples(f.L)
    out = []
    for i in range(f.b):
        # a linear function is determined by its values on unit vectors
        subset = tuple(j for j in range(f.L) if f.values[i, 1 << (f.L - 1 - j)])
        expected = X[:, list(subset)].sum(axis=1) % 2 if subset else np.zeros(len(X), dtype=int)
        if not np.array_equal(expected, f.values[i]):
            return None
        out.append(subset)
    return out


def parity_mutual_information(
    chips: np.ndarray, sigma: float, samples: int, rng, t_probs: np.ndarray | None = None, chunk: int = 50_000
) -> np.ndarray:
    """Per-sample log2 p(y | parity) / p(y) for Y = S T + Z.

    ``chips`` is the N x L signature matrix. T is i.i.d. uniform unless
    ``t_probs`` (length 2^L) is given. The mean of the result estimates
    I(xor T; Y).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive for the mixture densities")
    S = np.asarray(chips, dtype=float)
    N, L = S.shape
    Tall = all_tuples(L)
    parity = Tall.sum(axis=1) % 2
    means = Tall.astype(float) @ S.T  # (2^L, N)
    w = np.full(1 << L, 1.0 / (1 << L)) if t_probs is None else np.asarray(t_probs, dtype=float)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    p_par = np.array([w[parity == 0].sum(), w[parity == 1].sum()])

    out = np.empty(samples)
    for start in range(0, samples, chunk):
        size = min(chunk, samples - start)
        t = rng.choice(1 << L, size=size, p=w)
        y = means[t] + rng.normal(0.0, sigma, size=(size, N))
        d2 = ((y[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        log_joint = log_w[None, :] - d2 / (2 * sigma**2)  # common Gaussian factor cancels
        log_py = logsumexp(log_joint, axis=1)
        par = parity[t]
        log_joint_par = np.where(parity[None, :] == par[:, None], log_joint, -np.inf)
        log_py_given = logsumexp(log_joint_par, axis=1) - np.log(p_par[par])
        out[start:start + size] = (log_py_given - log_py) / math.log(2)
    return out


def ng_bound(
    signatures: SignatureMatrix | BitMatrix | np.ndarray,
    sigma: float,
    f: TruthTable,
    source: JointPmf,
    samples: int,
    seed: int,
    t_probs: np.ndarray | None = None,
) -> BoundReport:
    """Monte Carlo estimate of I(xor T; Y(1:N)) / (N H(U_1..U_b)) for XOR targets."""
    chips = _chips(signatures)
    N, L = chips.shape
    if f.L != L:
        raise DimensionError(f"signatures serve {L} users but f has L={f.L}")
    if xor_subsets(f) is None:
        raise ValueError("the comparison bound only applies to XORs of input subsets")
    if L > 8 or N > 4:
        raise CapExceeded(f"L={L}, N={N} exceed the evaluation caps L<=8, N<=4")
    rng = np.random.default_rng(seed)
    mi = float(np.clip(parity_mutual_information(chips, sigma, samples, rng, t_probs).mean(), 0.0, 1.0))
    hu = joint_function_entropy(source, f)
    # the numerator slot carries the mutual information here, not a capacity
    return BoundReport("nazer-gastpar", mi, hu, N, theorem_rate(mi, N, hu), sigma, None)


def ng_search(
    N: int, sigma: float, f: TruthTable, source: JointPmf, samples: int, seed: int
) -> tuple[np.ndarray, BoundReport]:
    """Best binary N x L signature matrix by exhaustive search (N * L <= 12).

    Every candidate is scored with the same seed (common random numbers).
    """
    L = f.L
    if N * L > 12:
        raise ValueError(f"exhaustive search needs N*L <= 12, got {N * L}")
    best = None
    for bits in itertools.product((0, 1), repeat=N * L):
        chips = np.array(bits, dtype=np.uint8).reshape(N, L)
        rep = ng_bound(chips, sigma, f, source, samples, seed)
        if best is None or rep.c > best[1].c:
            best = (chips, rep)
    return best


def _chips(signatures) -> np.ndarray:
    if isinstance(signatures, SignatureMatrix):
        return signatures.chips.to_array()
    if isinstance(signatures, BitMatrix):
        return signatures.to_array()
    return np.asarray(signatures, dtype=np.uint8)
