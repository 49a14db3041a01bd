"""Slepian-Wolf coding where every encoder uses the same compression matrix B.

Decoding is exact maximum likelihood over the affine solution sets of the
received syndromes, which is tractable at the short block lengths used for
validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from . import parallel
from .gf2 import (
    BitMatrix,
    BitVector,
    DimensionError,
    mul,
    random_full_rank,
    random_matrix,
    solve_affine,
    span_array,
)
from .source import JointPmf, conditional_entropy, entropy, marginal_entropies, sample, subsets

MAX_SOLUTION_DIM = 12
MAX_SOURCES = 4
# Joint search enumerates the product of the per-source solution sets.
MAX_JOINT_DIM = 24


class CapExceeded(RuntimeError):
    pass


class InconsistentSyndrome(ValueError):
    pass


@dataclass(frozen=True)
class CommonCompressor:
    B: BitMatrix

    @property
    def m(self) -> int:
        return self.B.nrows

    @property
    def n(self) -> int:
        return self.B.ncols

    @property
    def rate(self) -> float:
        return self.B.nrows / self.B.ncols


def rows_for_rate(n: int, rate: float) -> int:
    # tiny slack so that e.g. 16 * 0.75 does not round up past 12
    return max(1, math.ceil(n * rate - 1e-9))


def random_compressor(n: int, rate: float, rng, full_rank: bool = False) -> CommonCompressor:
    m = rows_for_rate(n, rate)
    draw = random_full_rank if full_rank else random_matrix
    return CommonCompressor(draw(m, n, rng))


# -- rate bounds ---------------------------------------------------------------

def corner_rate_sw(vp: JointPmf) -> float:
    """Smallest R with (R, ..., R) in the Slepian-Wolf region."""
    r = vp.L
    best = 0.0
    for S in subsets(r):
        rest = [i for i in range(r) if i not in S]
        best = max(best, conditional_entropy(vp, S, rest) / len(S))
    return best


def claim1_bound(vp: JointPmf) -> float:
    """max(H(K), H(V_1 | K)) with K = V_1 xor V_2."""
    if vp.L != 2:
        raise DimensionError("the two-source bound needs exactly 2 sources")
    p = vp.probs
    pk1 = p[0b01] + p[0b10]
    hk = entropy(JointPmf(1, [1 - pk1, pk1]))
    # (K, V_1) has pmf over index 2*k + v1
    kv = JointPmf(2, [p[0b00], p[0b11], p[0b01], p[0b10]])
    return max(hk, entropy(kv) - hk)


def claim2_upper(vp: JointPmf) -> float:
    """min(r * R_SW, max_i H(V_i))."""
    return min(vp.L * corner_rate_sw(vp), max(marginal_entropies(vp)))


# -- encoding / decoding ---------------------------------------------------------

def encode(c: CommonCompressor, v) -> BitVector:
    if not isinstance(v, BitVector):
        v = BitVector.from_bits(v)
    if v.n != c.n:
        raise DimensionError(f"block length {v.n} != {c.n}")
    return mul(c.B, v)


def solution_set(B: BitMatrix, s: BitVector) -> np.ndarray:
    sol = solve_affine(B, s)
    if sol is None:
        raise InconsistentSyndrome(f"syndrome {s} is not in the column space of B")
    particular, basis = sol
    if len(basis) > MAX_SOLUTION_DIM:
        raise CapExceeded(f"solution space dimension {len(basis)} > {MAX_SOLUTION_DIM}")
    return span_array(particular, basis)


def _log_table(probs) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(probs, dtype=float))


def argmax_first(scores: np.ndarray) -> int:
    """Index of the first maximal score, treating near-equal sums as ties."""
    top = scores.max()
    if not np.isfinite(top):
        return int(np.argmax(scores))
    tol = 1e-9 * max(1.0, abs(top))
    return int(np.flatnonzero(scores >= top - tol)[0])


def ml_single(cands: np.ndarray, log_p: np.ndarray, side: np.ndarray | None = None) -> np.ndarray:
    """Pick the candidate row maximising sum_t log_p[...] .

    With ``side`` given, ``log_p`` is indexed as ``log_p[side_t, v_t]``.
    """
    if side is None:
        scores = log_p[cands].sum(axis=1)
    else:
        scores = log_p[side[None, :], cands].sum(axis=1)
    return cands[argmax_first(scores)]


def _pair_scores(S1: np.ndarray, S2: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    # a pair's score only depends on the counts of each symbol pair, which are
    # affine in the weights w1, w2 and the overlap n11 (pmf index 2*v1 + v2)
    n = S1.shape[1]
    n11 = S1.astype(np.float64) @ S2.T.astype(np.float64)
    w1 = S1.sum(axis=1, dtype=np.float64)[:, None]
    w2 = S2.sum(axis=1, dtype=np.float64)[None, :]
    ok = np.isfinite(log_p)
    l00, l01, l10, l11 = np.where(ok, log_p, 0.0)
    scores = n11 * (l00 - l01 - l10 + l11)
    scores += w1 * (l10 - l00) + (w2 * (l01 - l00) + n * l00)
    if not ok.all():
        # total count of zero-probability symbol pairs
        f00, f01, f10, f11 = (~ok).astype(np.float64)
        bad = n11 * (f00 - f01 - f10 + f11)
        bad += w1 * (f10 - f00) + (w2 * (f01 - f00) + n * f00)
        scores[bad > 0.5] = -np.inf
    return scores


def _pair_search(S1: np.ndarray, S2: np.ndarray, log_p: np.ndarray, chunk: int = 256):
    """First maximiser (row-major) of the pair score matrix, built in row chunks."""
    tops = [
        _pair_scores(S1[i:i + chunk], S2, log_p).max()
        for i in range(0, len(S1), chunk)
    ]
    top = max(tops)
    tol = 1e-9 * max(1.0, abs(top)) if np.isfinite(top) else 0.0
    for i in range(0, len(S1), chunk):
        if tops[i // chunk] < top - tol:
            continue
        scores = _pair_scores(S1[i:i + chunk], S2, log_p)
        hit = np.flatnonzero(scores.ravel() >= top - tol)
        if hit.size:
            a, j = divmod(int(hit[0]), len(S2))
            return i + a, j
    raise AssertionError("unreachable")


def _joint_search(sets: Sequence[np.ndarray], vp: JointPmf) -> list[BitVector]:
    """Best tuple from the product of candidate sets; first maximiser in
    lexicographic order of the concatenation wins."""
    r = len(sets)
    if r != vp.L:
        raise DimensionError(f"{r} syndromes but pmf has {vp.L} sources")
    if r > MAX_SOURCES:
        raise CapExceeded(f"r={r} > {MAX_SOURCES}")
    total_dim = sum(len(S).bit_length() - 1 for S in sets)
    if total_dim > MAX_JOINT_DIM:
        raise CapExceeded(f"joint search space 2^{total_dim} > 2^{MAX_JOINT_DIM}")
    n = sets[0].shape[1]
    log_p = _log_table(vp.probs)
    if r == 2:
        a, j = _pair_search(sets[0], sets[1], log_p)
        return [BitVector.from_bits(sets[0][a]), BitVector.from_bits(sets[1][j])]

    # pmf index of the trailing sources, source 2 varying slowest
    rest = sets[1:]
    rest_idx = np.zeros((1, n), dtype=np.int64)
    for S in rest:
        rest_idx = (rest_idx[:, None, :] * 2 + S[None, :, :]).reshape(-1, n)
    shift = 1 << (r - 1)
    best_score, best = -np.inf, None
    for a, v1 in enumerate(sets[0]):
        scores = log_p[v1.astype(np.int64) * shift + rest_idx].sum(axis=1)
        j = argmax_first(scores)
        tol = 1e-9 * max(1.0, abs(scores[j])) if np.isfinite(scores[j]) else 0.0
        if best is None or scores[j] > best_score + tol:
            best_score, best = scores[j], (a, j)
    a, j = best
    picks = [sets[0][a]]
    sizes = [len(S) for S in rest]
    for t, S in enumerate(rest):
        stride = int(np.prod(sizes[t + 1:]))
        picks.append(S[(j // stride) % len(S)])
    return [BitVector.from_bits(p) for p in picks]


def joint_ml_decode(
    c: CommonCompressor, syndromes: Sequence[BitVector], vp: JointPmf
) -> list[BitVector]:
    """ML estimate of (v_1, ..., v_r) from B v_i = s_i under i.i.d. ``vp``.

    Ties go to the lexicographically smallest concatenation v_1 v_2 ... v_r.
    """
    if len(syndromes) > MAX_SOURCES:
        raise CapExceeded(f"r={len(syndromes)} > {MAX_SOURCES}")
    return _joint_search([solution_set(c.B, s) for s in syndromes], vp)


def separate_ml_decode(
    Bs: Sequence[BitMatrix], syndromes: Sequence[BitVector], vp: JointPmf
) -> list[BitVector]:
    """Same search as :func:`joint_ml_decode` with a distinct matrix per source."""
    if len(Bs) != len(syndromes):
        raise DimensionError("need one matrix per syndrome")
    if len(syndromes) > MAX_SOURCES:
        raise CapExceeded(f"r={len(syndromes)} > {MAX_SOURCES}")
    return _joint_search([solution_set(B, s) for B, s in zip(Bs, syndromes)], vp)


def sequential_decode_claim1(
    c: CommonCompressor, syndromes: Sequence[BitVector], vp: JointPmf
) -> list[BitVector]:
    """Decode K = V_1 xor V_2 from B K = s_1 xor s_2, then V_1 with K as side information."""
    if len(syndromes) != 2 or vp.L != 2:
        raise DimensionError("the sequential decoder handles exactly two sources")
    s1, s2 = syndromes
    p = vp.probs
    pk = np.array([p[0b00] + p[0b11], p[0b01] + p[0b10]])
    k_hat = ml_single(solution_set(c.B, s1 ^ s2), _log_table(pk))

    # log p(v1 | k) up to a per-symbol constant; p(k, v1) is enough for the argmax
    joint_kv = np.array([[p[0b00], p[0b11]], [p[0b01], p[0b10]]])
    v1_hat = ml_single(solution_set(c.B, s1), _log_table(joint_kv), side=k_hat.astype(np.int64))
    v1 = BitVector.from_bits(v1_hat)
    return [v1, v1 ^ BitVector.from_bits(k_hat)]


DECODERS = {"joint": joint_ml_decode, "sequential": sequential_decode_claim1}


# -- Monte Carlo ----------------------------------------------------------------

def sw_trial(
    seed_seq: np.random.SeedSequence,
    vp: JointPmf,
    n: int,
    rate: float,
    mode: str = "joint",
    B: BitMatrix | None = None,
    condition_full_rank: bool = True,
) -> bool:
    """One draw of B (unless fixed) and of the source blocks; True on exact recovery."""
    rng = np.random.default_rng(seed_seq)
    if B is None:
        m = rows_for_rate(n, rate)
        comp = random_compressor(n, rate, rng, full_rank=condition_full_rank and m >= n)
    else:
        comp = CommonCompressor(B)
    blocks = sample(vp, n, rng).T
    truth = [BitVector.from_bits(b) for b in blocks]
    synd = [encode(comp, v) for v in truth]
    decoded = DECODERS[mode](comp, synd, vp)
    return decoded == truth


def estimate_common_rate(
    vp: JointPmf,
    n: int,
    trials: int,
    rate_grid: Sequence[float],
    seed: int,
    mode: str = "joint",
    B: BitMatrix | None = None,
    workers: int | None = None,
) -> list[tuple[float, float, int]]:
    """Empirical block error of the common-matrix code at each rate.

    A fresh B is drawn per trial unless ``B`` is given. When the rate needs at
    least ``n`` rows the draw is conditioned on full column rank.
    """
    rows = []
    for gi, rate in enumerate(rate_grid):
        seeds = parallel.trial_seeds(seed, trials, stream=gi)
        fn = partial(sw_trial, vp=vp, n=n, rate=rate, mode=mode, B=B)
        ok = parallel.run_trials(fn, seeds, workers=workers)
        failures = trials - sum(ok)
        rows.append((float(rate), failures / trials, trials))
    return rows
