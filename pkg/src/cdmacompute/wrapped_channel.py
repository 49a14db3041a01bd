"""The binary-input Gaussian channel folded modulo 2 into [-1/2, 3/2).

After the receiver averages the repeated chips of a parity row and folds the
result, each parity row behaves like this point-to-point channel with noise
standard deviation ``sigma / sqrt(N // r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

LN2 = math.log(2.0)
LOW, HIGH = -0.5, 1.5


class DegenerateChannel(ValueError):
    """sigma_eff == 0: use the exact noiseless path instead of densities."""


@dataclass(frozen=True)
class ChannelParams:
    sigma: float
    N: int
    r: int

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if self.r < 1 or self.N < self.r:
            raise ValueError(f"need N >= r >= 1, got N={self.N}, r={self.r}")

    @property
    def repeats(self) -> int:
        return self.N // self.r

    @property
    def effective_sigma(self) -> float:
        return self.sigma / math.sqrt(self.repeats)


def fold(y):
    """Shift by a multiple of 2 into [-1/2, 3/2). Works elementwise on arrays."""
    y_arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y_arr)):
        raise ValueError("cannot fold a non-finite value")
    out = np.mod(y_arr + 0.5, 2.0) - 0.5
    # np.mod can round up to exactly 2.0 for tiny negative inputs
    out = np.where(out >= HIGH, out - 2.0, out)
    return float(out) if np.ndim(y) == 0 else out


def wrap_terms(sigma_eff: float) -> int:
    """Half-width of the truncated wrap series.

    The first neglected term is centred at least ``2*M - 2`` from any point of
    the output interval, i.e. at least ``9*sigma_eff + 4`` away, so the
    dropped Gaussian mass is below 1e-18 relative for every sigma_eff.
    """
    return max(3, math.ceil(4.5 * sigma_eff) + 3)


def _check_sigma(sigma_eff: float):
    if sigma_eff == 0:
        raise DegenerateChannel("sigma_eff = 0 has no density")
    if not sigma_eff > 0:
        raise ValueError("sigma_eff must be positive")


def _log_density(w, y, sigma_eff: float):
    _check_sigma(sigma_eff)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    M = wrap_terms(sigma_eff)
    shifts = 2.0 * np.arange(-M, M + 1)
    d = (y - w)[..., None] - shifts
    z = -0.5 * (d / sigma_eff) ** 2
    top = z.max(axis=-1)
    log_sum = top + np.log(np.exp(z - top[..., None]).sum(axis=-1))
    return log_sum - math.log(sigma_eff * math.sqrt(2 * math.pi))


def transition_density(w, y, sigma_eff: float):
    out = np.exp(_log_density(w, y, sigma_eff))
    return float(out) if out.ndim == 0 else out


def log_likelihood(w, y, sigma_eff: float):
    out = _log_density(w, y, sigma_eff)
    return float(out) if out.ndim == 0 else out


def llr(y, sigma_eff: float):
    """log p(y|1) - log p(y|0)."""
    out = _log_density(1, y, sigma_eff) - _log_density(0, y, sigma_eff)
    return float(out) if out.ndim == 0 else out


def mutual_information(sigma_eff: float, p1: float = 0.5) -> float:
    """I(W; Y) in bits for P(W=1) = p1.

    Written as sum_w P(w) * integral of p(y|w) log2(p(y|w)/p(y)) so that each
    integrand is a nonnegative-in-expectation divergence term; the two
    conditional densities are mirror images, so both integrals share the
    same breakpoints at the peaks and midpoints.
    """
    _check_sigma(sigma_eff)
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must lie in [0, 1]")
    if p1 in (0.0, 1.0):
        return 0.0
    p0 = 1.0 - p1
    log_p0, log_p1 = math.log(p0), math.log(p1)

    def term(w: int, log_pw: float):
        def g(y):
            l0 = _log_density(0, y, sigma_eff)
            l1 = _log_density(1, y, sigma_eff)
            lw = l1 if w else l0
            mix = np.logaddexp(log_p0 + l0, log_p1 + l1)
            return float(np.exp(lw) * (lw - mix) / LN2)

        val, _ = integrate.quad(g, LOW, HIGH, points=[0.0, 0.5, 1.0], epsabs=1e-11, epsrel=1e-11, limit=400)
        return val

    total = p0 * term(0, log_p0) + p1 * term(1, log_p1)
    return min(1.0, max(0.0, total))


def capacity(sigma_eff: float) -> float:
    """Capacity in bits; the channel is symmetric so the uniform input is optimal."""
    if sigma_eff == 0:
        return 1.0
    return mutual_information(sigma_eff, 0.5)


def sigma_for_capacity(c: float, lo: float = 1e-3, hi: float = 10.0) -> float:
    """Inverse of :func:`capacity` on (0, 1)."""
    from scipy.optimize import brentq

    if not 0.0 < c < 1.0:
        raise ValueError("target capacity must lie strictly between 0 and 1")
    return brentq(lambda s: capacity(s) - c, lo, hi, xtol=1e-12)


def sample_output(w, sigma_eff: float, rng, size=None):
    """fold(w + Gaussian noise); exact ``w`` when sigma_eff is 0."""
    if sigma_eff < 0:
        raise ValueError("sigma_eff must be nonnegative")
    w_arr = np.broadcast_to(np.asarray(w, dtype=float), size if size is not None else np.shape(w))
    if sigma_eff == 0:
        out = w_arr.astype(float).copy()
    else:
        out = fold(w_arr + rng.normal(0.0, sigma_eff, size=w_arr.shape))
    return float(out) if np.ndim(out) == 0 else out


def wrapped_cdf(y, w: int, sigma_eff: float):
    """P(Y <= y | W = w) for y in [-1/2, 3/2)."""
    from scipy.stats import norm

    _check_sigma(sigma_eff)
    y = np.asarray(y, dtype=float)
    M = wrap_terms(sigma_eff) + 1
    shifts = w + 2.0 * np.arange(-M, M + 1)
    hi = norm.cdf((y[..., None] - shifts) / sigma_eff)
    lo = norm.cdf((LOW - shifts) / sigma_eff)
    return (hi - lo).sum(axis=-1)
