import itertools
import math

import numpy as np
import pytest

from cdmacompute.codec import (
    PAD,
    CodecSpec,
    build_signature,
    chip_transmit,
    channel_decode,
    codec_trial,
    design_code,
    encode_all,
    encode_user,
    full_decode,
    monte_carlo,
    receiver_frontend,
    transmit,
)
from cdmacompute.function_space import TruthTable, all_tuples
from cdmacompute.gf2 import BitMatrix, BitVector, random_full_rank, random_matrix
from cdmacompute.source import BscStar, JointPmf, bsc_star_pmf
from cdmacompute.sw_common import CapExceeded
from cdmacompute.wrapped_channel import capacity, fold, sigma_for_capacity

UNIFORM3 = JointPmf.uniform(3)
STAR = bsc_star_pmf(BscStar((0, 0.1, 0.2)))


def test_build_signature_examples(H1):
    sig = build_signature(H1, 2)
    assert sig.chips == H1
    assert [sig.signature(i).to_tuple() for i in range(3)] == [(1, 1), (1, 0), (0, 1)]
    sig = build_signature(H1, 5)
    assert sig.chips.rows == (H1.rows[0],) * 2 + (H1.rows[1],) * 2 + (0,)
    assert sig.schedule == (0, 0, 1, 1, PAD) and sig.repeats == 2
    H = random_matrix(3, 6, 1)
    assert build_signature(H, 3).chips == H
    with pytest.raises(ValueError):
        build_signature(H1, 1)


def test_design_code_examples(H1):
    spec = design_code(H1, UNIFORM3, 2, 0.0, 8, rng=0)
    assert spec.n == spec.m == 8
    spec = design_code(H1, UNIFORM3, 2, 0.3, 10, eps_source=0.25, eps_chan=0.1, rng=1)
    c = capacity(0.3 / 1)
    assert spec.m == math.ceil(10 * 1.25)
    assert spec.n == math.ceil(spec.m / (c - 0.1))
    assert spec.rate == 10 / (spec.n * 2)
    assert spec.G.shape == (spec.n, spec.m) and spec.B.shape == (spec.m, spec.k)
    with pytest.raises(ValueError):
        design_code(H1, UNIFORM3, 2, 5.0, 4, eps_chan=0.5)
    with pytest.raises(CapExceeded):
        design_code(H1, UNIFORM3, 2, 0.0, 24)


def test_rate_formula(H1):
    spec = design_code(H1, STAR, 4, 0.5, 12, eps_source=0.1, eps_chan=0.05, rng=3)
    assert spec.rate == pytest.approx(spec.k / (spec.n * spec.N), rel=0, abs=0)
    c = capacity(spec.sigma_eff)
    R = max(0.468996, 0.721928)  # claim2_upper for V1 ~ Bern(0.1), V2 ~ Bern(0.2) independent
    assert spec.m == math.ceil(12 * (R + 0.1))
    assert spec.n == math.ceil(spec.m / (c - 0.05))


def test_encode_user(H1, rng):
    spec = design_code(H1, UNIFORM3, 2, 0.3, 6, eps_chan=0.1, rng=2)
    assert encode_user(np.zeros(6, dtype=int), spec).weight() == 0
    for _ in range(20):
        a, b = rng.integers(0, 2, 6), rng.integers(0, 2, 6)
        assert encode_user(a ^ b, spec) == encode_user(a, spec) ^ encode_user(b, spec)
    ident = CodecSpec(H1, BitMatrix.identity(1), BitMatrix.identity(1), 2, 0.0)
    assert encode_user(BitVector.from_bits([1]), ident).to_tuple() == (1,)
    with pytest.raises(ValueError):
        encode_user(np.zeros(5, dtype=int), spec)


def test_chip_transmit_examples(H1, rng):
    sig = build_signature(H1, 2)
    T = np.array([[1, 0, 0], [0, 1, 1], [1, 1, 1]])
    Y = chip_transmit(T, sig, 0.0, rng)
    assert Y.tolist() == [[1, 1], [1, 1], [2, 2]]
    Z = chip_transmit(np.zeros((50_000, 3)), sig, 0.7, rng)
    assert abs(Z.mean()) < 0.01 and Z.std() == pytest.approx(0.7, rel=0.01)


def test_frontend_noiseless_exhaustive(rng):
    H = random_matrix(3, 10, rng)
    sig = build_signature(H, 7)
    T = all_tuples(10)
    out = receiver_frontend(chip_transmit(T, sig, 0.0, rng), sig)
    expect = T.astype(np.int64) @ H.to_array().T.astype(np.int64) % 2
    assert np.array_equal(out, expect)


def test_frontend_ignores_pads(H1, rng):
    sig = build_signature(H1, 5)
    Y = rng.normal(size=(40, 5))
    Y2 = Y.copy()
    Y2[:, 4] = rng.normal(0, 100, 40)
    assert np.array_equal(receiver_frontend(Y, sig), receiver_frontend(Y2, sig))


def test_frontend_averaging_halves_variance(H1, rng):
    sigma = 0.1
    var = []
    for N in (2, 4):
        sig = build_signature(H1, N)
        out = receiver_frontend(chip_transmit(np.zeros((100_000, 3)), sig, sigma, rng), sig)
        var.append(out.var())
    assert var[1] / var[0] == pytest.approx(0.5, rel=0.05)


def test_fold_commutes_with_integer_signal(H1):
    z = np.linspace(-3.37, 3.41, 401)
    X = all_tuples(3).astype(np.int64)
    for s in X @ H1.to_array().T.astype(np.int64):
        for si in s:
            assert np.allclose(fold(si + z), fold(si % 2 + z), atol=1e-12)


def test_matrix_identity_of_proof(H1, rng):
    for _ in range(10):
        spec = design_code(H1, UNIFORM3, 2, 0.3, 7, eps_chan=0.1, rng=rng)
        O = rng.integers(0, 2, (7, 3))
        T = encode_all(O, spec)
        Ht = H1.to_array().T.astype(np.int64)
        V = O @ Ht % 2
        assert np.array_equal(T.astype(np.int64) @ Ht % 2, spec.GB.astype(np.int64) @ V % 2)


def test_channel_decode_noiseless(H1, rng):
    spec = design_code(H1, UNIFORM3, 2, 0.0, 8, rng=4)
    G = spec.G.to_array().astype(np.int64)
    for u in range(1 << spec.m):
        ubits = BitVector(spec.m, u)
        y = (G @ ubits.to_array().astype(np.int64) % 2).astype(float)
        assert channel_decode(y, spec) == ubits


def test_channel_decode_zero_word(H1):
    spec = CodecSpec(H1, random_full_rank(6, 6, 0), random_full_rank(14, 6, 1), 2, 0.05)
    assert channel_decode(np.zeros(14), spec).weight() == 0


def test_channel_decode_half_capacity(H1, rng):
    # N = r = 2 so sigma_eff = sigma
    sigma = sigma_for_capacity(0.7)
    m, n = 12, math.ceil(12 / 0.35)
    spec = CodecSpec(H1, random_full_rank(m, m, rng), random_full_rank(n, m, rng), 2, sigma)
    G = spec.G.to_array().astype(np.int64)
    errors = 0
    for _ in range(500):
        u = rng.integers(0, 2, m)
        y = fold((G @ u % 2) + rng.normal(0, sigma, n))
        errors += channel_decode(y, spec).to_tuple() != tuple(u)
    assert errors / 500 <= 0.10


def test_full_decode_noiseless_exhaustive(H1, f_sim):
    for source in (UNIFORM3, STAR):
        spec = CodecSpec(H1, random_full_rank(2, 2, 5), random_full_rank(2, 2, 6), 2, 0.0)
        for seq in itertools.product(range(8), repeat=2):
            O = all_tuples(3)[list(seq)]
            Y = transmit(O, spec, None)
            assert np.array_equal(full_decode(Y, spec, f_sim, source), f_sim.evaluate(O).T)


def test_full_decode_noiseless_every_coset_constant_f(H1):
    spec = CodecSpec(H1, random_full_rank(3, 3, 1), random_full_rank(3, 3, 2), 2, 0.0)
    cls = [0, 1, 2, 3, 3, 2, 1, 0]  # coset index of each tuple under H1
    rng = np.random.default_rng(0)
    O = rng.integers(0, 2, (3, 3))
    for per_coset in itertools.product((0, 1), repeat=4):
        f = TruthTable(3, np.array([per_coset[c] for c in cls]))
        Y = transmit(O, spec, None)
        assert np.array_equal(full_decode(Y, spec, f, UNIFORM3), f.evaluate(O).T)


def test_constant_function_always_correct(H1):
    spec = CodecSpec(H1, random_full_rank(4, 4, 0), random_full_rank(8, 4, 1), 2, 2.0)
    res = monte_carlo(spec, UNIFORM3, TruthTable.constant(3, 1), 30, 0)
    assert res.errors == 0


def test_monte_carlo_noiseless(H1, f_sim):
    # square B, so the source stage is lossless as well
    spec = design_code(H1, STAR, 2, 0.0, 6, rng=0, rate_denominator=1.0)
    assert spec.m == spec.n == 6
    res = monte_carlo(spec, STAR, f_sim, 50, 1, fresh_codes=True)
    assert res.errors == 0 and res.c == 1.0
    assert res.bound == pytest.approx(1.0 / (2 * 0.721928), abs=1e-5)


def test_monte_carlo_deterministic(H1, f_sim):
    spec = design_code(H1, STAR, 2, 0.35, 6, eps_chan=0.1, rng=0)
    a = monte_carlo(spec, STAR, f_sim, 60, 7)
    assert a == monte_carlo(spec, STAR, f_sim, 60, 7)
    assert a == monte_carlo(spec, STAR, f_sim, 60, 7, workers=2)
    assert 0 < a.errors < 60


def test_monte_carlo_refuses_bad_f(H1):
    spec = design_code(H1, UNIFORM3, 2, 0.0, 4, rng=0)
    with pytest.raises(ValueError):
        monte_carlo(spec, UNIFORM3, TruthTable.from_callable(3, lambda a, b, c: a), 5, 0)


# -- independent re-implementation ------------------------------------------------

def _oracle_trial(rng, H, B, G, N, sigma, probs, f):
    """Straight-line version of the pipeline, loops and direct formulas only."""
    r, L = H.shape
    m, k = B.shape
    n = G.shape[0]
    reps = N // r
    O = np.array([list(t) for t in rng.choice(
        list(itertools.product((0, 1), repeat=L)), size=k, p=probs)])
    GB = (G @ B) % 2
    T = (GB @ O) % 2  # (n, L)
    chips = np.repeat(H, reps, axis=0)
    folded = np.zeros((n, r))
    for j in range(n):
        for i in range(r):
            vals = [chips[i * reps + q] @ T[j] + rng.normal(0, sigma) for q in range(reps)]
            y = np.mean(vals)
            folded[j, i] = (y + 0.5) - 2 * math.floor((y + 0.5) / 2) - 0.5
    s_eff = sigma / math.sqrt(reps)

    ts = np.arange(-10, 11)

    def logdens(w, y):
        return np.log(np.exp(-((y[:, None] - w - 2 * ts) ** 2) / (2 * s_eff**2)).sum(axis=1))

    msgs = list(itertools.product((0, 1), repeat=m))
    words = np.array([(G @ np.array(u)) % 2 for u in msgs])
    synd = []
    cols = np.arange(n)
    for i in range(r):
        table = np.stack([logdens(0, folded[:, i]), logdens(1, folded[:, i])])
        ll = table[words, cols].sum(axis=1)
        synd.append(np.array(msgs[int(np.argmax(ll))]))
    # V_i = O h_i^t; its law is the pushforward of the source
    vlaw = {}
    for x, p in zip(itertools.product((0, 1), repeat=L), probs):
        v = tuple(int(np.dot(h, x) % 2) for h in H)
        vlaw[v] = vlaw.get(v, 0.0) + p
    blocks = list(itertools.product((0, 1), repeat=k))
    cands = [[v for v in blocks if np.array_equal(B @ np.array(v) % 2, s)] for s in synd]
    best, best_p = None, -1.0
    for combo in itertools.product(*cands):
        p = 1.0
        for t in range(k):
            p *= vlaw.get(tuple(c[t] for c in combo), 0.0)
        if p > best_p:
            best, best_p = combo, p
    V = np.array(best).T  # (k, r)
    # evaluate f on any tuple of the decoded coset
    table = {}
    for x in itertools.product((0, 1), repeat=L):
        table.setdefault(tuple(int(np.dot(h, x) % 2) for h in H), f(*x))
    U_hat = [table[tuple(row)] for row in V]
    U = [f(*row) for row in O]
    return U_hat == U


def _wilson(errors, trials, z=1.959964):
    p = errors / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials**2)) / den
    return mid - half, mid + half


def test_monte_carlo_matches_reimplementation(H1, f_sim):
    sigma = sigma_for_capacity(0.7)
    spec = design_code(H1, STAR, 2, sigma, 6, eps_chan=0.2, rng=12)
    assert spec.m == 5
    res = monte_carlo(spec, STAR, f_sim, 300, 21)
    f = lambda a, b, c: ((1 - a) * b * c + a * (1 - b) * (1 - c)) % 2
    rng = np.random.default_rng(99)
    args = (H1.to_array().astype(int), spec.B.to_array().astype(int),
            spec.G.to_array().astype(int), 2, sigma, STAR.probs, f)
    oracle_ok = sum(_oracle_trial(rng, *args) for _ in range(3000))
    oracle_rate = 1 - oracle_ok / 3000
    lo, hi = _wilson(res.errors, res.trials)
    assert 0.02 < oracle_rate < 0.9
    assert lo <= oracle_rate <= hi


def test_codec_trial_uses_seed(H1, f_sim):
    spec = design_code(H1, STAR, 2, 0.4, 6, eps_chan=0.1, rng=0)
    ss = np.random.SeedSequence([1, 2, 3])
    assert codec_trial(ss, spec, STAR, f_sim, True) == codec_trial(
        np.random.SeedSequence([1, 2, 3]), spec, STAR, f_sim, True)
