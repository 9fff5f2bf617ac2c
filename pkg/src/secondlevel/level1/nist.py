"""SP800-22 rev 1a first-level tests (Random Excursions excluded).

Each test takes a 0/1 ``uint8`` array and returns ``(p_values, statistics)``
as tuples; single-output tests return one-element tuples.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .. import kernels
from ..errors import InvalidParameter
from ..numerics import erfc, igamc, normal_cdf
from .params import Level1Params


def _clip(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


def _require(n: int, minimum: int, name: str) -> None:
    if n < minimum:
        raise InvalidParameter(f"{name} needs n >= {minimum}, got {n}")


def _chi2(observed, expected) -> float:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return float(np.sum((observed - expected) ** 2 / expected))


# -- frequency ---------------------------------------------------------------


def frequency_pvalue(s_abs: int, n: int) -> float:
    """p-value for |#ones - #zeros| = s_abs; shared with the exact distribution."""
    return erfc(s_abs / math.sqrt(2.0 * n))


def frequency(bits, params: Level1Params):
    n = bits.size
    _require(n, max(1, params.frequency_min_n), "frequency")
    s = 2 * int(np.count_nonzero(bits)) - n
    return (frequency_pvalue(abs(s), n),), (abs(s) / math.sqrt(n),)


def block_frequency(bits, params: Level1Params):
    M = params.block_frequency_m
    N = bits.size // M
    _require(N, 1, "block frequency (blocks)")
    pi = bits[: N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    return (_clip(igamc(N / 2.0, chi2 / 2.0)),), (chi2,)


def runs(bits, params: Level1Params):
    n = bits.size
    _require(n, 100, "runs")
    pi = np.count_nonzero(bits) / n
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # frequency prerequisite failed; SP800-22 reports p = 0
        return (0.0,), (float(v),)
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return (_clip(erfc(num / den)),), (float(v),)


# -- longest run of ones -------------------------------------------------------

_LONGEST_RUN = {
    # M: (lowest class, highest class, probabilities)
    8: (1, 4, (0.2148, 0.3672, 0.2305, 0.1875)),
    128: (4, 9, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    10000: (10, 16, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
}


def _max_runs(blocks: np.ndarray) -> np.ndarray:
    # longest run of ones per row via run-length bookkeeping on the padded rows
    N, M = blocks.shape
    padded = np.zeros((N, M + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    d = np.diff(padded, axis=1)
    r_start, c_start = np.nonzero(d == 1)
    _, c_end = np.nonzero(d == -1)
    out = np.zeros(N, dtype=np.int64)
    np.maximum.at(out, r_start, c_end - c_start)
    return out


def longest_run(bits, params: Level1Params):
    n = bits.size
    _require(n, 128, "longest run")
    M = 8 if n < 6272 else (128 if n < 750000 else 10000)
    lo, hi, probs = _LONGEST_RUN[M]
    N = n // M
    runs_ = np.clip(_max_runs(bits[: N * M].reshape(N, M)), lo, hi)
    counts = np.bincount(runs_ - lo, minlength=hi - lo + 1)
    chi2 = _chi2(counts, N * np.array(probs))
    return (_clip(igamc((len(probs) - 1) / 2.0, chi2 / 2.0)),), (chi2,)


# -- binary matrix rank ----------------------------------------------------------


@lru_cache(maxsize=None)
def rank_probabilities(rows: int = 32, cols: int = 32) -> tuple:
    """Exact P(rank = r) of a uniform random rows x cols GF(2) matrix, r = 0..min."""
    out = []
    for r in range(min(rows, cols) + 1):
        prod = Fraction(1)
        for i in range(r):
            prod *= Fraction((2 ** rows - 2 ** i) * (2 ** cols - 2 ** i), 2 ** r - 2 ** i)
        out.append(prod / Fraction(2) ** (rows * cols))
    return tuple(out)


@lru_cache(maxsize=None)
def rank_class_probabilities(size: int = 32) -> tuple:
    """(P(full rank), P(full - 1), P(lower)) as floats."""
    probs = rank_probabilities(size, size)
    full, minus1 = probs[size], probs[size - 1]
    return float(full), float(minus1), float(1 - full - minus1)


def rank_chi2(counts, N: int, size: int = 32) -> float:
    """Chi-square of the (full, full - 1, lower) rank counts; shared with theory."""
    pis = rank_class_probabilities(size)
    return sum((f - N * p) ** 2 / (N * p) for f, p in zip(counts, pis))


def rank_pvalue(chi2: float) -> float:
    return math.exp(-chi2 / 2.0)


def matrix_rows(bits: np.ndarray, size: int = 32) -> np.ndarray:
    """Pack consecutive size*size blocks into uint64 row words, first bit = MSB."""
    N = bits.size // (size * size)
    blk = bits[: N * size * size].reshape(N, size, size).astype(np.uint64)
    weights = np.uint64(1) << np.arange(size - 1, -1, -1, dtype=np.uint64)
    return (blk * weights).sum(axis=2, dtype=np.uint64)


def binary_matrix_rank(bits, params: Level1Params, size: int = 32):
    N = bits.size // (size * size)
    _require(N, 1, "binary matrix rank (matrices)")
    ranks = kernels.gf2_rank_batch(matrix_rows(bits, size), size)
    full = int(np.count_nonzero(ranks == size))
    minus1 = int(np.count_nonzero(ranks == size - 1))
    chi2 = rank_chi2((full, minus1, N - full - minus1), N, size)
    return (_clip(rank_pvalue(chi2)),), (chi2,)


# -- spectral -----------------------------------------------------------------


def dft(bits, params: Level1Params):
    n = bits.size
    _require(n, 1000, "discrete Fourier transform")
    x = 2.0 * bits - 1.0
    mod = np.abs(np.fft.rfft(x))[: n // 2]
    T = math.sqrt(math.log(1.0 / 0.05) * n)
    N0 = 0.95 * n / 2.0
    N1 = int(np.count_nonzero(mod < T))
    d = (N1 - N0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return (_clip(erfc(abs(d) / math.sqrt(2.0))),), (d,)


# -- template matching ---------------------------------------------------------


@lru_cache(maxsize=None)
def aperiodic_templates(m: int) -> tuple:
    """All length-m templates without a proper self-overlap, ascending."""
    out = []
    for v in range(2 ** m):
        t = format(v, f"0{m}b")
        if not any(t[k:] == t[: m - k] for k in range(1, m)):
            out.append(t)
    return tuple(out)


def non_overlapping_template(bits, params: Level1Params, variant: int = 1):
    m = params.non_overlapping_m
    N = params.non_overlapping_blocks
    templates = aperiodic_templates(m)
    if not 1 <= variant <= len(templates):
        raise InvalidParameter(f"template index must be in 1..{len(templates)}")
    M = bits.size // N
    _require(M, m, "non-overlapping template (block length)")
    tpl = np.frombuffer(templates[variant - 1].encode(), dtype=np.uint8) - ord("0")
    W = kernels.nonoverlapping_counts(np.ascontiguousarray(bits[: N * M].reshape(N, M)), tpl)
    mu = (M - m + 1) / 2.0 ** m
    var = M * (1.0 / 2.0 ** m - (2 * m - 1) / 2.0 ** (2 * m))
    chi2 = float(np.sum((W - mu) ** 2) / var)
    return (_clip(igamc(N / 2.0, chi2 / 2.0)),), (chi2,)


@lru_cache(maxsize=None)
def overlapping_probabilities(m: int, M: int, K: int) -> tuple:
    """Exact class probabilities for the count of 1^m hits in an M-bit block.

    Dynamic programme over (trailing-ones run capped at m-1, hits capped at K).
    """
    # prob[r, c]: trailing run r (< m), hit count c (K = "K or more")
    prob = np.zeros((m, K + 1))
    prob[0, 0] = 1.0
    for _ in range(M):
        nxt = np.zeros_like(prob)
        nxt[0, :] += 0.5 * prob.sum(axis=0)
        for r in range(m):
            r1 = r + 1
            if r1 >= m:
                # a full window of ones ends here
                nxt[m - 1, 1:] += 0.5 * prob[r, :-1]
                nxt[m - 1, K] += 0.5 * prob[r, K]
            else:
                nxt[min(r1, m - 1), :] += 0.5 * prob[r, :]
        prob = nxt
    return tuple(float(v) for v in prob.sum(axis=0))


def overlapping_template(bits, params: Level1Params):
    m, M, K = params.overlapping_m, params.overlapping_block, params.overlapping_classes
    N = bits.size // M
    _require(N, 1, "overlapping template (blocks)")
    blocks = bits[: N * M].reshape(N, M)
    win = np.lib.stride_tricks.sliding_window_view(blocks, m, axis=1)
    hits = np.minimum(win.all(axis=2).sum(axis=1), K)
    counts = np.bincount(hits, minlength=K + 1)
    pi = overlapping_probabilities(m, M, K)
    chi2 = _chi2(counts, N * np.array(pi))
    return (_clip(igamc(K / 2.0, chi2 / 2.0)),), (chi2,)


# -- Maurer's universal --------------------------------------------------------

_UNIVERSAL_EXPECTED = (
    0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507, 7.1836656,
    8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488, 15.167379,
)
_UNIVERSAL_VARIANCE = (
    0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238,
    3.311, 3.356, 3.384, 3.401, 3.410, 3.416, 3.419, 3.421,
)


def universal(bits, params: Level1Params):
    L, Q = params.universal_l, params.universal_q
    if not 1 <= L <= 16:
        raise InvalidParameter(f"universal block length must be 1..16, got {L}")
    blocks_total = bits.size // L
    K = blocks_total - Q
    _require(K, 1, "universal (test blocks)")
    weights = 1 << np.arange(L - 1, -1, -1)
    vals = bits[: blocks_total * L].reshape(blocks_total, L).astype(np.int64) @ weights
    # previous 1-based position of the same block value (0 if none)
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    prev_sorted = np.zeros(blocks_total, dtype=np.int64)
    same = sv[1:] == sv[:-1]
    prev_sorted[1:] = np.where(same, order[:-1] + 1, 0)
    prev = np.empty(blocks_total, dtype=np.int64)
    prev[order] = prev_sorted
    pos = np.arange(Q + 1, blocks_total + 1)
    prev = prev[Q:]
    fn = float(np.sum(np.log2(pos - prev))) / K
    c = 0.7 - 0.8 / L + (4 + 32 / L) * K ** (-3.0 / L) / 15.0
    sigma = c * math.sqrt(_UNIVERSAL_VARIANCE[L - 1] / K)
    p = erfc(abs(fn - _UNIVERSAL_EXPECTED[L - 1]) / (math.sqrt(2.0) * sigma))
    return (_clip(p),), (fn,)


# -- linear complexity -------------------------------------------------------------

_LC_PI = (0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)


def linear_complexity(bits, params: Level1Params):
    M = params.linear_complexity_m
    N = bits.size // M
    _require(N, 1, "linear complexity (blocks)")
    L = kernels.linear_complexity(np.ascontiguousarray(bits[: N * M].reshape(N, M)))
    mu = M / 2.0 + (9.0 + (-1) ** (M + 1)) / 36.0 - (M / 3.0 + 2.0 / 9.0) / 2.0 ** M
    T = (-1) ** M * (L - mu) + 2.0 / 9.0
    cls = np.digitize(T, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5], right=True)
    counts = np.bincount(cls, minlength=7)
    chi2 = _chi2(counts, N * np.array(_LC_PI))
    return (_clip(igamc(3.0, chi2 / 2.0)),), (chi2,)


# -- serial and approximate entropy ----------------------------------------------


def _pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Counts of every overlapping m-bit pattern with wrap-around."""
    if m <= 0:
        return np.array([bits.size])
    ext = np.concatenate([bits, bits[: m - 1]]).astype(np.int64)
    vals = np.zeros(bits.size, dtype=np.int64)
    for k in range(m):
        vals = (vals << 1) | ext[k: k + bits.size]
    return np.bincount(vals, minlength=2 ** m)


def _psi2(bits, m: int) -> float:
    if m <= 0:
        return 0.0
    n = bits.size
    nu = _pattern_counts(bits, m).astype(float)
    return 2.0 ** m / n * float(np.dot(nu, nu)) - n


def serial(bits, params: Level1Params):
    m = params.serial_m
    if m < 3:
        raise InvalidParameter(f"serial needs m >= 3, got {m}")
    _require(bits.size, 2 ** m, "serial")
    p0, p1, p2 = _psi2(bits, m), _psi2(bits, m - 1), _psi2(bits, m - 2)
    d1 = p0 - p1
    d2 = p0 - 2.0 * p1 + p2
    pv1 = igamc(2.0 ** (m - 2), max(d1, 0.0) / 2.0)
    pv2 = igamc(2.0 ** (m - 3), max(d2, 0.0) / 2.0)
    return (_clip(pv1), _clip(pv2)), (d1, d2)


def approximate_entropy(bits, params: Level1Params):
    m = params.apen_m
    n = bits.size
    _require(n, m + 1, "approximate entropy")

    def phi(k):
        c = _pattern_counts(bits, k)
        c = c[c > 0] / n
        return float(np.sum(c * np.log(c)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return (_clip(igamc(2.0 ** (m - 1), max(chi2, 0.0) / 2.0)),), (chi2,)


# -- cumulative sums ------------------------------------------------------------------


def _cusum_pvalue(z: int, n: int) -> float:
    sq = math.sqrt(n)
    s1 = 0.0
    for k in range(math.floor((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1):
        s1 += normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    s2 = 0.0
    for k in range(math.floor((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1):
        s2 += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return _clip(1.0 - s1 + s2)


def cumulative_sums(bits, params: Level1Params):
    n = bits.size
    _require(n, 100, "cumulative sums")
    x = 2 * bits.astype(np.int64) - 1
    fwd = int(np.max(np.abs(np.cumsum(x))))
    bwd = int(np.max(np.abs(np.cumsum(x[::-1]))))
    return (_cusum_pvalue(fwd, n), _cusum_pvalue(bwd, n)), (float(fwd), float(bwd))
