"""End-to-end over-the-air computation of coset-constant functions.

Pipeline: repeat the parity-check matrix H into an N-chip signature matrix;
each user sends T_i = G B O_i; the receiver averages the repeated chips of
every parity row, folds modulo 2, channel-decodes each row to B V_i, runs the
common-matrix Slepian-Wolf decoder to get V_1..V_r and maps every syndrome
column back to function values through the coset table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache, partial

import numpy as np

from . import parallel
from .function_space import TruthTable, lookup_array
from .gf2 import BitMatrix, BitVector, DimensionError, random_full_rank
from .source import JointPmf, sample, v_joint
from .sw_common import (
    CapExceeded,
    CommonCompressor,
    argmax_first,
    claim2_upper,
    joint_ml_decode,
    rows_for_rate,
)
from .wrapped_channel import ChannelParams, capacity, fold, llr

MAX_MESSAGE_BITS = 20
PAD = -1


@dataclass(frozen=True)
class SignatureMatrix:
    chips: BitMatrix  # N x L; column l is user l's signature
    schedule: tuple[int, ...]  # parity row (0-based) per chip row, PAD for zero rows
    r: int

    @property
    def N(self) -> int:
        return self.chips.nrows

    @property
    def L(self) -> int:
        return self.chips.ncols

    @property
    def repeats(self) -> int:
        return self.N // self.r

    def signature(self, user: int) -> BitVector:
        return self.chips.column(user)


def build_signature(H: BitMatrix, N: int) -> SignatureMatrix:
    """Each row of H repeated N // r times in order, then all-zero pad rows."""
    r = H.nrows
    if N < r:
        raise ValueError(f"signature length N={N} is shorter than r={r} rows of H")
    reps = N // r
    rows, schedule = [], []
    for i, h in enumerate(H.rows):
        rows += [h] * reps
        schedule += [i] * reps
    pad = N - r * reps
    rows += [0] * pad
    schedule += [PAD] * pad
    return SignatureMatrix(BitMatrix(N, H.ncols, tuple(rows)), tuple(schedule), r)


@dataclass(frozen=True)
class CodecSpec:
    H: BitMatrix
    B: BitMatrix  # m x k
    G: BitMatrix  # n x m
    N: int
    sigma: float

    def __post_init__(self):
        if self.G.ncols != self.B.nrows:
            raise DimensionError(f"G has {self.G.ncols} columns but B has {self.B.nrows} rows")
        if self.N < self.H.nrows:
            raise ValueError(f"N={self.N} < r={self.H.nrows}")

    @property
    def k(self) -> int:
        return self.B.ncols

    @property
    def m(self) -> int:
        return self.B.nrows

    @property
    def n(self) -> int:
        return self.G.nrows

    @property
    def r(self) -> int:
        return self.H.nrows

    @property
    def L(self) -> int:
        return self.H.ncols

    @property
    def rate(self) -> float:
        return self.k / (self.n * self.N)

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(self.sigma, self.N, self.r)

    @property
    def sigma_eff(self) -> float:
        return self.channel.effective_sigma

    @property
    def signature(self) -> SignatureMatrix:
        return build_signature(self.H, self.N)

    @property
    def GB(self) -> np.ndarray:
        return (self.G.to_array().astype(np.int64) @ self.B.to_array() % 2).astype(np.uint8)


def design_code(
    H: BitMatrix,
    source: JointPmf,
    N: int,
    sigma: float,
    k: int,
    eps_source: float = 0.0,
    eps_chan: float = 0.0,
    rng=None,
    rate_denominator: float | None = None,
) -> CodecSpec:
    """Random B (m x k) and G (n x m) sized from the source rate and channel capacity.

    ``rate_denominator`` overrides the common-matrix Slepian-Wolf rate, which
    otherwise defaults to the computable upper bound ``claim2_upper``.
    Both matrices are drawn conditioned on full rank.
    """
    rng = np.random.default_rng(rng)
    params = ChannelParams(sigma, N, H.nrows)
    c = capacity(params.effective_sigma)
    if c <= eps_chan:
        raise ValueError(f"capacity {c:.6g} does not exceed the channel margin {eps_chan}")
    R = claim2_upper(v_joint(source, H)) if rate_denominator is None else rate_denominator
    m = rows_for_rate(k, R + eps_source)
    n = max(m, math.ceil(m / (c - eps_chan) - 1e-9))
    if m > MAX_MESSAGE_BITS:
        raise CapExceeded(f"m={m} message bits exceeds the exhaustive decoder cap {MAX_MESSAGE_BITS}")
    B = random_full_rank(m, k, rng)
    G = random_full_rank(n, m, rng)
    return CodecSpec(H, B, G, N, sigma)


def redraw(spec: CodecSpec, rng) -> CodecSpec:
    """Same dimensions, fresh B and G."""
    return replace(
        spec,
        B=random_full_rank(spec.m, spec.k, rng),
        G=random_full_rank(spec.n, spec.m, rng),
    )


# -- transmitter side -----------------------------------------------------------

def encode_user(o_block, spec: CodecSpec) -> BitVector:
    """T = G B o over GF(2)."""
    o = np.asarray(o_block.to_array() if isinstance(o_block, BitVector) else o_block, dtype=np.int64)
    if o.shape != (spec.k,):
        raise DimensionError(f"observation block must have length {spec.k}")
    return BitVector.from_bits(spec.GB.astype(np.int64) @ o % 2)


def encode_all(O: np.ndarray, spec: CodecSpec) -> np.ndarray:
    """Observations (k, L) to codewords (n, L)."""
    return (spec.GB.astype(np.int64) @ np.asarray(O, dtype=np.int64) % 2).astype(np.uint8)


def chip_transmit(T: np.ndarray, sig: SignatureMatrix, sigma: float, rng) -> np.ndarray:
    """Received chips, shape (n, N): Y[j, q] = sum_l sig[q, l] T[j, l] + noise."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[1] != sig.L:
        raise DimensionError(f"expected codewords of shape (n, {sig.L})")
    Y = T @ sig.chips.to_array().T.astype(float)
    if sigma > 0:
        Y = Y + rng.normal(0.0, sigma, size=Y.shape)
    return Y


def receiver_frontend(Y: np.ndarray, sig: SignatureMatrix) -> np.ndarray:
    """Average the chips of each parity row, drop pads, fold. Shape (n, r)."""
    Y = np.asarray(Y, dtype=float)
    sched = np.array(sig.schedule)
    out = np.empty((Y.shape[0], sig.r))
    for i in range(sig.r):
        out[:, i] = Y[:, sched == i].mean(axis=1)
    return fold(out)


# -- receiver side ----------------------------------------------------------------

@lru_cache(maxsize=32)
def _codebook(G: BitMatrix) -> np.ndarray:
    """All 2^m codewords G u as uint8 rows, u in increasing integer order."""
    m = G.ncols
    if m > MAX_MESSAGE_BITS:
        raise CapExceeded(f"m={m} > {MAX_MESSAGE_BITS} for exhaustive ML decoding")
    U = ((np.arange(1 << m)[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)
    Ga = G.to_array()
    C = np.zeros((1 << m, G.nrows), dtype=np.uint8)
    for j in range(m):
        C ^= U[:, j:j + 1] & Ga[:, j][None, :]
    return C


def channel_decode(y: np.ndarray, spec: CodecSpec) -> BitVector:
    """Exhaustive ML estimate of the m-bit message behind one parity row.

    Ties go to the smallest message. With sigma_eff = 0 the folded values are
    exact bits and the closest codeword in L1 distance is selected.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n,):
        raise DimensionError(f"expected {spec.n} received values")
    C = _codebook(spec.G)
    if spec.sigma_eff == 0:
        weights, offset = 1.0 - 2.0 * y, y.sum()
        # -sum|c - y| for c, y in {0, 1}
        score_of = lambda chunk: -(chunk @ weights + offset)
    else:
        # sum_t log p(y_t | c_t) = const + sum_t c_t * llr_t
        weights = llr(y, spec.sigma_eff)
        score_of = lambda chunk: chunk @ weights
    scores = np.empty(C.shape[0])
    step = 1 << 14
    for start in range(0, C.shape[0], step):
        scores[start:start + step] = score_of(C[start:start + step].astype(float))
    return BitVector(spec.m, argmax_first(scores))


def full_decode(Y: np.ndarray, spec: CodecSpec, f: TruthTable, source: JointPmf) -> np.ndarray:
    """Estimated function values, shape (b, k)."""
    table = lookup_array(spec.H, f)
    sig = spec.signature
    folded = receiver_frontend(Y, sig)
    syndromes = [channel_decode(folded[:, i], spec) for i in range(spec.r)]
    V = joint_ml_decode(CommonCompressor(spec.B), syndromes, v_joint(source, spec.H))
    Vmat = np.array([v.to_array() for v in V], dtype=np.int64)  # (r, k)
    idx = (1 << np.arange(spec.r - 1, -1, -1)) @ Vmat
    U = table[idx].T
    # unreachable syndromes can only come from a decoding error
    return np.where(U < 0, 0, U).astype(np.uint8)


def transmit(O: np.ndarray, spec: CodecSpec, rng) -> np.ndarray:
    return chip_transmit(encode_all(O, spec), spec.signature, spec.sigma, rng)


# -- Monte Carlo --------------------------------------------------------------------

def codec_trial(seed_seq, spec: CodecSpec, source: JointPmf, f: TruthTable, fresh_codes: bool) -> bool:
    """True if every function block was recovered."""
    rng = np.random.default_rng(seed_seq)
    if fresh_codes:
        spec = redraw(spec, rng)
    O = sample(source, spec.k, rng)
    Y = transmit(O, spec, rng)
    U_hat = full_decode(Y, spec, f, source)
    return bool(np.array_equal(U_hat, f.evaluate(O).T))


@dataclass(frozen=True)
class MonteCarloResult:
    block_error_rate: float
    errors: int
    trials: int
    rate: float
    c: float
    bound: float
    sigma_eff: float


def monte_carlo(
    spec: CodecSpec,
    source: JointPmf,
    f: TruthTable,
    trials: int,
    seed: int,
    fresh_codes: bool = False,
    workers: int | None = None,
    rate_denominator: float | None = None,
) -> MonteCarloResult:
    from .bounds import theorem_rate

    lookup_array(spec.H, f)  # refuse non coset-constant f before any work
    seeds = parallel.trial_seeds(seed, trials)
    fn = partial(codec_trial, spec=spec, source=source, f=f, fresh_codes=fresh_codes)
    ok = parallel.run_trials(fn, seeds, workers=workers)
    errors = trials - sum(ok)
    c = capacity(spec.sigma_eff)
    R = claim2_upper(v_joint(source, spec.H)) if rate_denominator is None else rate_denominator
    return MonteCarloResult(
        block_error_rate=errors / trials,
        errors=errors,
        trials=trials,
        rate=spec.rate,
        c=c,
        bound=theorem_rate(c, spec.N, R),
        sigma_eff=spec.sigma_eff,
    )
