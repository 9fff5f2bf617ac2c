"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names at the bottom of the module are bound to one flavour at
import time (see ``secondlevel._jit``). Both flavours stay importable under
their suffixed names so tests and the benchmark can compare them directly.
"""
import numpy as np

from ._jit import USE_NUMBA, njit

MT_N = 312
MT_M = 156
_MATRIX_A = np.uint64(0xB5026F5AA96619E9)
_UPPER = np.uint64(0xFFFFFFFF80000000)
_LOWER = np.uint64(0x7FFFFFFF)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_S1 = np.uint64(1)
_S29 = np.uint64(29)
_S17 = np.uint64(17)
_S37 = np.uint64(37)
_S43 = np.uint64(43)
_T1 = np.uint64(0x5555555555555555)
_T2 = np.uint64(0x71D67FFFEDA60000)
_T3 = np.uint64(0xFFF7EEE000000000)


# --------------------------------------------------------------------------
# MT19937-64 bulk output
# --------------------------------------------------------------------------


@njit(cache=True)
def _mt64_fill_numba(mt, index, count):
    out = np.empty(count, dtype=np.uint64)
    for k in range(count):
        if index >= MT_N:
            for i in range(MT_N):
                y = (mt[i] & _UPPER) | (mt[(i + 1) % MT_N] & _LOWER)
                v = mt[(i + MT_M) % MT_N] ^ (y >> _S1)
                if y & _ONE:
                    v ^= _MATRIX_A
                mt[i] = v
            index = 0
        x = mt[index]
        index += 1
        x ^= (x >> _S29) & _T1
        x ^= (x << _S17) & _T2
        x ^= (x << _S37) & _T3
        x ^= x >> _S43
        out[k] = x
    return out, index


def _mt64_twist_numpy(mt):
    # three slices so every read sees the value the sequential loop would
    def upd(lo, hi):
        nxt = np.arange(lo + 1, hi + 1) % MT_N
        y = (mt[lo:hi] & _UPPER) | (mt[nxt] & _LOWER)
        src = mt[(np.arange(lo, hi) + MT_M) % MT_N]
        mag = np.where((y & _ONE) == _ONE, _MATRIX_A, _ZERO)
        mt[lo:hi] = src ^ (y >> _S1) ^ mag

    upd(0, MT_N - MT_M)
    upd(MT_N - MT_M, MT_N - 1)
    upd(MT_N - 1, MT_N)


def _mt64_temper_numpy(x):
    x = x ^ ((x >> _S29) & _T1)
    x = x ^ ((x << _S17) & _T2)
    x = x ^ ((x << _S37) & _T3)
    return x ^ (x >> _S43)


def _mt64_fill_numpy(mt, index, count):
    out = np.empty(count, dtype=np.uint64)
    k = 0
    while k < count:
        if index >= MT_N:
            _mt64_twist_numpy(mt)
            index = 0
        take = min(MT_N - index, count - k)
        out[k:k + take] = mt[index:index + take]
        index += take
        k += take
    return _mt64_temper_numpy(out), index


# --------------------------------------------------------------------------
# GF(2) rank of a batch of square bit matrices, one uint64 word per row
# --------------------------------------------------------------------------


@njit(cache=True)
def _gf2_rank_batch_numba(rows, ncols):
    nmat, nrows = rows.shape
    ranks = np.empty(nmat, dtype=np.int64)
    work = np.empty(nrows, dtype=np.uint64)
    for k in range(nmat):
        for r in range(nrows):
            work[r] = rows[k, r]
        rank = 0
        for col in range(ncols):
            bit = np.uint64(1) << np.uint64(ncols - 1 - col)
            piv = -1
            for r in range(rank, nrows):
                if work[r] & bit:
                    piv = r
                    break
            if piv < 0:
                continue
            tmp = work[rank]
            work[rank] = work[piv]
            work[piv] = tmp
            for r in range(nrows):
                if r != rank and (work[r] & bit):
                    work[r] ^= work[rank]
            rank += 1
            if rank == nrows:
                break
        ranks[k] = rank
    return ranks


def _gf2_rank_batch_numpy(rows, ncols):
    work = np.array(rows, dtype=np.uint64, copy=True)
    nmat, nrows = work.shape
    rank = np.zeros(nmat, dtype=np.int64)
    ridx = np.arange(nrows)
    sel = np.arange(nmat)
    for col in range(ncols):
        bit = np.uint64(1) << np.uint64(ncols - 1 - col)
        has = ((work & bit) != 0) & (ridx[None, :] >= rank[:, None])
        found = has.any(axis=1)
        if not found.any():
            continue
        k = sel[found]
        piv = has[found].argmax(axis=1)
        dst = rank[found]
        prow = work[k, piv].copy()
        work[k, piv] = work[k, dst]
        work[k, dst] = prow
        hit = (work[k] & bit) != 0
        hit[np.arange(k.size), dst] = False
        work[k] ^= np.where(hit, prow[:, None], _ZERO)
        rank[found] += 1
    return rank


# --------------------------------------------------------------------------
# Berlekamp-Massey linear complexity, one block per row
# --------------------------------------------------------------------------


@njit(cache=True)
def _linear_complexity_numba(blocks):
    nblk, M = blocks.shape
    out = np.empty(nblk, dtype=np.int64)
    c = np.empty(M + 1, dtype=np.uint8)
    b = np.empty(M + 1, dtype=np.uint8)
    t = np.empty(M + 1, dtype=np.uint8)
    for k in range(nblk):
        s = blocks[k]
        c[:] = 0
        b[:] = 0
        c[0] = 1
        b[0] = 1
        L = 0
        mm = -1
        for N in range(M):
            d = s[N]
            for i in range(1, L + 1):
                d ^= c[i] & s[N - i]
            if d:
                t[:] = c[:]
                shift = N - mm
                for i in range(0, M + 1 - shift):
                    c[i + shift] ^= b[i]
                if L <= N // 2:
                    L = N + 1 - L
                    mm = N
                    b[:] = t[:]
        out[k] = L
    return out


def _linear_complexity_numpy(blocks):
    nblk, M = blocks.shape
    out = np.empty(nblk, dtype=np.int64)
    for k in range(nblk):
        s = blocks[k].astype(np.uint8)
        c = np.zeros(M + 1, dtype=np.uint8)
        b = np.zeros(M + 1, dtype=np.uint8)
        c[0] = b[0] = 1
        L, mm = 0, -1
        for N in range(M):
            d = (int(s[N]) + int(np.dot(c[1:L + 1], s[N - L:N][::-1]))) & 1 if L else int(s[N])
            if d:
                t = c.copy()
                shift = N - mm
                c[shift:] ^= b[:M + 1 - shift]
                if L <= N // 2:
                    L, mm, b = N + 1 - L, N, t
        out[k] = L
    return out


# --------------------------------------------------------------------------
# Non-overlapping template matches (skip the window after a hit)
# --------------------------------------------------------------------------


@njit(cache=True)
def _nonoverlapping_counts_numba(blocks, template):
    nblk, M = blocks.shape
    m = template.size
    out = np.zeros(nblk, dtype=np.int64)
    for k in range(nblk):
        j = 0
        while j <= M - m:
            ok = True
            for i in range(m):
                if blocks[k, j + i] != template[i]:
                    ok = False
                    break
            if ok:
                out[k] += 1
                j += m
            else:
                j += 1
    return out


def _nonoverlapping_counts_numpy(blocks, template):
    nblk, M = blocks.shape
    m = template.size
    win = np.lib.stride_tricks.sliding_window_view(blocks, m, axis=1)
    hits = np.all(win == template[None, None, :], axis=2)
    out = np.zeros(nblk, dtype=np.int64)
    for k in range(nblk):
        nxt = 0
        for j in np.flatnonzero(hits[k]):
            if j >= nxt:
                out[k] += 1
                nxt = j + m
    return out


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov suprema
# --------------------------------------------------------------------------


@njit(cache=True)
def _sup_continuous_numba(u):
    """sup |ECDF - F| given F(p_(i)) for the sorted sample."""
    m = u.size
    best = 0.0
    for i in range(m):
        a = (i + 1) / m - u[i]
        b = u[i] - i / m
        if a > best:
            best = a
        if b > best:
            best = b
    return best


def _sup_continuous_numpy(u):
    m = u.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - u), np.max(u - (i - 1) / m), 0.0))


@njit(cache=True)
def _sup_two_sample_numba(a, b):
    m = a.size
    n = b.size
    i = 0
    j = 0
    best = 0.0
    while i < m and j < n:
        x = a[i] if a[i] <= b[j] else b[j]
        while i < m and a[i] == x:
            i += 1
        while j < n and b[j] == x:
            j += 1
        d = abs(i / m - j / n)
        if d > best:
            best = d
    # once one sample is exhausted the gap only shrinks toward 0
    return best


def _sup_two_sample_numpy(a, b):
    pts = np.concatenate([a, b])
    ga = np.searchsorted(a, pts, side="right") / a.size
    gb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(ga - gb)))


@njit(cache=True)
def _step_sups_numba(values, ref_cum, counts, m):
    """(sup vs uniform, sup vs the step reference) for a sample on the atoms."""
    acc = 0
    prev = 0.0
    d_unif = 0.0
    d_ref = 0.0
    for k in range(values.size):
        acc += counts[k]
        g = acc / m
        v = values[k]
        a = abs(g - v)
        b = abs(prev - v)
        if a > d_unif:
            d_unif = a
        if b > d_unif:
            d_unif = b
        c = abs(g - ref_cum[k])
        if c > d_ref:
            d_ref = c
        prev = g
    return d_unif, d_ref


def _step_sups_numpy(values, ref_cum, counts, m):
    g = np.cumsum(counts) / m
    prev = np.concatenate([[0.0], g[:-1]])
    d_unif = max(np.max(np.abs(g - values)), np.max(np.abs(prev - values)))
    d_ref = np.max(np.abs(g - ref_cum))
    return float(d_unif), float(d_ref)


if USE_NUMBA:
    mt64_fill = _mt64_fill_numba
    gf2_rank_batch = _gf2_rank_batch_numba
    linear_complexity = _linear_complexity_numba
    nonoverlapping_counts = _nonoverlapping_counts_numba
    sup_continuous = _sup_continuous_numba
    sup_two_sample = _sup_two_sample_numba
    step_sups = _step_sups_numba
else:
    mt64_fill = _mt64_fill_numpy
    gf2_rank_batch = _gf2_rank_batch_numpy
    linear_complexity = _linear_complexity_numpy
    nonoverlapping_counts = _nonoverlapping_counts_numpy
    sup_continuous = _sup_continuous_numpy
    sup_two_sample = _sup_two_sample_numpy
    step_sups = _step_sups_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

FLAVOURS = {
    "mt64_fill": (_mt64_fill_numba, _mt64_fill_numpy),
    "gf2_rank_batch": (_gf2_rank_batch_numba, _gf2_rank_batch_numpy),
    "linear_complexity": (_linear_complexity_numba, _linear_complexity_numpy),
    "nonoverlapping_counts": (_nonoverlapping_counts_numba, _nonoverlapping_counts_numpy),
    "sup_continuous": (_sup_continuous_numba, _sup_continuous_numpy),
    "sup_two_sample": (_sup_two_sample_numba, _sup_two_sample_numpy),
    "step_sups": (_step_sups_numba, _step_sups_numpy),
}
