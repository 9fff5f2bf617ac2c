"""Every numba kernel against its numpy twin, plus independent oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from secondlevel import kernels
from secondlevel.kernels import FLAVOURS

NB = {k: v[0] for k, v in FLAVOURS.items()}
NP = {k: v[1] for k, v in FLAVOURS.items()}


def test_every_kernel_has_both_flavours():
    assert set(FLAVOURS) == {"mt64_fill", "gf2_rank_batch", "linear_complexity", "nonoverlapping_counts",
                             "sup_continuous", "sup_two_sample", "step_sups"}
    assert kernels.BACKEND in ("numba", "numpy")


def _mt_state(seed):
    from secondlevel.bitsource import MT19937_64
    g = MT19937_64(seed)
    return g.mt.copy(), g.index


@pytest.mark.parametrize("count", [1, 311, 312, 313, 2000])
def test_mt64_fill_flavours_agree(count):
    mt_a, idx = _mt_state(77)
    mt_b = mt_a.copy()
    out_a, ia = NB["mt64_fill"](mt_a, idx, count)
    out_b, ib = NP["mt64_fill"](mt_b, idx, count)
    assert np.array_equal(out_a, out_b) and ia == ib
    assert np.array_equal(mt_a, mt_b)


def _rank_oracle(rows, ncols):
    # plain Gaussian elimination on python ints
    rows = [int(r) for r in rows]
    rank = 0
    for col in range(ncols - 1, -1, -1):
        bit = 1 << col
        piv = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_gf2_rank_flavours_and_oracle(nrows, ncols, seed):
    rng = np.random.default_rng(seed)
    # low-rank structure is more interesting than uniform rows
    basis = rng.integers(0, 2 ** ncols, size=max(1, nrows // 2), dtype=np.uint64)
    mix = rng.integers(0, 2, size=(8, nrows, basis.size)).astype(bool)
    batch = np.zeros((8, nrows), dtype=np.uint64)
    for b in range(8):
        for r in range(nrows):
            acc = np.uint64(0)
            for k in np.flatnonzero(mix[b, r]):
                acc ^= basis[k]
            batch[b, r] = acc
    batch[:4] = rng.integers(0, 2 ** ncols, size=(4, nrows), dtype=np.uint64)
    a = NB["gf2_rank_batch"](batch, ncols)
    b = NP["gf2_rank_batch"](batch, ncols)
    assert np.array_equal(a, b)
    assert a.tolist() == [_rank_oracle(r, ncols) for r in batch]


def _bm_oracle(s):
    # textbook Berlekamp-Massey over GF(2) on a python list
    n = len(s)
    c, b = [1] + [0] * n, [1] + [0] * n
    L, m = 0, -1
    for i in range(n):
        d = s[i]
        for j in range(1, L + 1):
            d ^= c[j] & s[i - j]
        if d:
            t = c[:]
            for j in range(n - i + m):
                c[i - m + j] ^= b[j]
            if 2 * L <= i:
                L, m, b = i + 1 - L, i, t
    return L


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 80), st.integers(0, 2 ** 32 - 1))
def test_linear_complexity_flavours_and_oracle(nblk, M, seed):
    blocks = np.random.default_rng(seed).integers(0, 2, size=(nblk, M), dtype=np.uint8)
    a = NB["linear_complexity"](blocks)
    b = NP["linear_complexity"](blocks)
    assert np.array_equal(a, b)
    assert a.tolist() == [_bm_oracle(list(map(int, r))) for r in blocks]


def test_linear_complexity_known_values():
    # 1101011110001 has linear complexity 4 (SP800-22 worked example)
    s = np.array([[1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1]], dtype=np.uint8)
    assert kernels.linear_complexity(s).tolist() == [4]
    assert kernels.linear_complexity(np.zeros((1, 10), dtype=np.uint8)).tolist() == [0]


def _nonoverlap_oracle(row, tpl):
    s, t = "".join(map(str, row)), "".join(map(str, tpl))
    j = c = 0
    while j <= len(s) - len(t):
        if s[j:j + len(t)] == t:
            c += 1
            j += len(t)
        else:
            j += 1
    return c


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(9, 120), st.integers(1, 9), st.integers(0, 2 ** 32 - 1))
def test_nonoverlapping_counts_flavours_and_oracle(nblk, M, m, seed):
    rng = np.random.default_rng(seed)
    blocks = rng.integers(0, 2, size=(nblk, M), dtype=np.uint8)
    tpl = rng.integers(0, 2, size=min(m, M), dtype=np.uint8)
    a = NB["nonoverlapping_counts"](blocks, tpl)
    b = NP["nonoverlapping_counts"](blocks, tpl)
    assert np.array_equal(a, b)
    assert a.tolist() == [_nonoverlap_oracle(r, tpl) for r in blocks]


unit = st.floats(0.0, 1.0, allow_nan=False)


@given(hnp.arrays(np.float64, st.integers(1, 200), elements=unit))
def test_sup_continuous_flavours(u):
    u = np.sort(u)
    assert NB["sup_continuous"](u) == NP["sup_continuous"](u)


@given(hnp.arrays(np.float64, st.integers(1, 100), elements=unit),
       hnp.arrays(np.float64, st.integers(1, 100), elements=unit))
def test_sup_two_sample_flavours(a, b):
    a, b = np.sort(a), np.sort(b)
    assert NB["sup_two_sample"](a, b) == pytest.approx(NP["sup_two_sample"](a, b), abs=1e-15)


def test_sup_two_sample_ties():
    a = np.array([0.2, 0.2, 0.5])
    b = np.array([0.2, 0.5, 0.5])
    # after 0.2: 2/3 vs 1/3; after 0.5 both reach 1
    for f in (NB["sup_two_sample"], NP["sup_two_sample"]):
        assert f(a, b) == pytest.approx(1 / 3, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 500), st.integers(0, 2 ** 32 - 1))
def test_step_sups_flavours(k, m, seed):
    rng = np.random.default_rng(seed)
    values = np.sort(rng.choice(np.linspace(0.01, 1.0, 100), size=k, replace=False))
    masses = rng.random(k)
    masses /= masses.sum()
    counts = rng.multinomial(m, masses).astype(np.int64)
    cum = np.cumsum(masses)
    a = NB["step_sups"](values, cum, counts, m)
    b = NP["step_sups"](values, cum, counts, m)
    assert a == pytest.approx(b, abs=1e-15)
