import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from secondlevel.errors import InvalidParameter
from secondlevel.kstest import ReferenceDistribution
from secondlevel.level1 import Level1Params, rank_class_probabilities
from secondlevel.level1.nist import frequency_pvalue
from secondlevel.numerics import erfc
from secondlevel.theory import (
    GeParams,
    StepDistribution,
    compute_d,
    delta_bound,
    exact_distribution,
    exact_distribution_frequency,
    exact_distribution_rank,
    ge_cdf,
    ge_sample,
    mu_constant,
    safe_sample_size,
)


def brute_force_frequency(n):
    """Enumerate all 2^n sequences; p-value distribution as a dict value -> probability."""
    dist = {}
    for bits in itertools.product((0, 1), repeat=n):
        s = abs(2 * sum(bits) - n)
        p = erfc(s / math.sqrt(2 * n))
        dist[p] = dist.get(p, 0) + 1
    return {p: c / 2 ** n for p, c in dist.items()}


def grid_d(atoms):
    """sup |G(x) - x| probing each atom, its left limit and a coarse grid."""
    vals = np.array(sorted(atoms))
    cum = np.cumsum([atoms[v] for v in vals])
    pts = np.concatenate([vals, np.nextafter(vals, -1.0), np.linspace(0, 1, 10 ** 4)])
    pts = pts[(pts >= 0) & (pts <= 1)]
    idx = np.searchsorted(vals, pts, side="right")
    G = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return float(np.max(np.abs(G - pts)))


class TestFrequencyDistribution:
    def test_n1(self):
        G = exact_distribution_frequency(1)
        assert G.size == 1
        assert G.values[0] == pytest.approx(0.31731, abs=1e-5)
        assert G.masses[0] == pytest.approx(1.0, abs=1e-15)

    def test_n2(self):
        G = exact_distribution_frequency(2)
        assert G.values.tolist() == pytest.approx([erfc(1.0), 1.0], abs=1e-15)
        assert G.values[0] == pytest.approx(0.15730, abs=1e-5)
        assert G.masses.tolist() == pytest.approx([0.5, 0.5], abs=1e-15)

    @pytest.mark.parametrize("n", list(range(1, 21)))
    def test_matches_exhaustive_enumeration(self, n):
        brute = brute_force_frequency(n)
        G = exact_distribution_frequency(n)
        assert G.size == len(brute)
        for v, mass in zip(G.values, G.masses):
            assert brute[float(v)] == pytest.approx(mass, abs=1e-15)
        assert compute_d(G).d == pytest.approx(grid_d(brute), abs=1e-12)

    def test_uses_level1_pvalue_code(self):
        G = exact_distribution_frequency(1000)
        full = {frequency_pvalue(s, 1000) for s in range(0, 1001, 2)}
        kept = set(G.values.tolist())
        # atoms under 1e-18 are folded away, every retained one is bit-identical
        assert kept <= full
        heavy = {frequency_pvalue(s, 1000) for s in range(0, 1001, 2) if stats.binom.pmf((1000 + s) // 2, 1000, 0.5) > 1e-17}
        assert heavy <= kept

    @pytest.mark.parametrize("n", [1, 7, 100, 10 ** 4, 10 ** 6])
    def test_mass_sums_to_one(self, n):
        G = exact_distribution_frequency(n)
        assert G.total_mass == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(G.values) > 0)
        assert G.cumulative[-1] == pytest.approx(1.0, abs=1e-12)


class TestRankDistribution:
    def test_n_one_matrix(self):
        G = exact_distribution_rank(1024)
        pis = rank_class_probabilities(32)
        assert G.size == 3
        # the full-rank class has the smallest chi2, hence the largest p
        chi2 = [(1 - pis[0]) ** 2 / pis[0] + pis[1] + pis[2],
                pis[0] + (1 - pis[1]) ** 2 / pis[1] + pis[2],
                pis[0] + pis[1] + (1 - pis[2]) ** 2 / pis[2]]
        expected = sorted((math.exp(-c / 2), p) for c, p in zip(chi2, pis))
        assert G.values.tolist() == pytest.approx([v for v, _ in expected], abs=1e-15)
        assert G.masses.tolist() == pytest.approx([p for _, p in expected], abs=1e-15)

    def test_two_matrices_against_monte_carlo(self):
        G = exact_distribution_rank(2048)
        pis = rank_class_probabilities(32)
        rng = np.random.default_rng(777)
        draws = rng.multinomial(2, pis, size=10 ** 7)
        e = 2 * np.array(pis)
        chi2 = ((draws - e) ** 2 / e).sum(axis=1)
        vals, counts = np.unique(np.round(np.exp(-chi2 / 2), 12), return_counts=True)
        assert len(vals) == G.size == 6
        freq = counts / 10 ** 7
        for v, f in zip(vals, freq):
            k = int(np.argmin(np.abs(G.values - v)))
            assert G.values[k] == pytest.approx(v, abs=1e-11)
            sigma = math.sqrt(G.masses[k] * (1 - G.masses[k]) / 10 ** 7)
            assert abs(f - G.masses[k]) <= 3 * sigma

    def test_trinomial_masses(self):
        # factored binomial form equals the direct multinomial pmf
        G = exact_distribution_rank(5 * 1024)
        pis = rank_class_probabilities(32)
        direct = {}
        for a in range(6):
            for b in range(6 - a):
                c = 5 - a - b
                e = [5 * x for x in pis]
                chi2 = (a - e[0]) ** 2 / e[0] + (b - e[1]) ** 2 / e[1] + (c - e[2]) ** 2 / e[2]
                p = round(math.exp(-chi2 / 2), 13)
                direct[p] = direct.get(p, 0) + stats.multinomial.pmf([a, b, c], 5, pis)
        assert G.size == len(direct)
        for v, mass in zip(G.values, G.masses):
            assert direct[round(float(v), 13)] == pytest.approx(mass, abs=1e-15)

    def test_requires_a_matrix(self):
        with pytest.raises(InvalidParameter):
            exact_distribution_rank(1023)

    def test_mass_sums_to_one(self):
        assert exact_distribution_rank(100 * 1024).total_mass == pytest.approx(1.0, abs=1e-12)


class TestDeviation:
    @pytest.mark.parametrize("e", [-0.5, -0.1, 0.0, 0.1, 0.5])
    def test_ge_d_is_abs_e(self, e):
        assert compute_d(GeParams(e)).d == abs(e)

    def test_ge_d_against_grid(self):
        x = np.linspace(0, 1, 10 ** 6 + 1)
        for e in (0.1, -0.25):
            assert float(np.max(np.abs(ge_cdf(GeParams(e), x) - x))) == pytest.approx(abs(e), abs=1e-12)

    @pytest.mark.parametrize("m", [10, 100, 1000])
    def test_dense_uniform_step(self, m):
        G = StepDistribution.from_atoms(np.arange(1, m + 1) / m, np.full(m, 1 / m))
        assert compute_d(G).d == pytest.approx(1 / m, abs=1e-12)

    def test_step_vs_step(self):
        G = exact_distribution_frequency(50)
        assert compute_d(G, ReferenceDistribution("step", G)).d == pytest.approx(0.0, abs=1e-15)
        H = exact_distribution_frequency(51)
        pts = np.union1d(G.values, H.values)
        assert compute_d(G, H).d == pytest.approx(float(np.max(np.abs(G.cdf(pts) - H.cdf(pts)))), abs=1e-15)

    def test_frequency_at_one_million(self):
        d = compute_d(exact_distribution_frequency(10 ** 6)).d
        assert d == pytest.approx(7.98e-4, rel=0.02)
        assert delta_bound(10 ** 6, d) == pytest.approx(0.798, rel=0.02)

    def test_attained_location_is_an_atom(self):
        G = exact_distribution_frequency(100)
        b = compute_d(G)
        assert b.attained_at in set(G.values.tolist())
        assert 0.0 <= b.d <= 1.0


class TestBounds:
    def test_delta_bound(self):
        assert delta_bound(10 ** 6, 7.98e-4) == pytest.approx(0.798)
        assert delta_bound(12345, 0.0) == 0.0
        with pytest.raises(InvalidParameter):
            delta_bound(0, 0.1)

    def test_safe_sample_size(self):
        assert safe_sample_size(0.1, 0.01) == 100
        assert safe_sample_size(0.1, 0.005) == 4 * safe_sample_size(0.1, 0.01)
        assert safe_sample_size(0.1, 0.0) == math.inf
        with pytest.raises(InvalidParameter):
            safe_sample_size(0.0, 0.1)

    @given(st.floats(1e-4, 10.0), st.floats(1e-5, 1.0))
    def test_inverse_pair(self, delta, d):
        m = safe_sample_size(delta, d)
        if m >= 1:
            assert delta_bound(m, d) <= delta
        assert delta_bound(m + 1, d) > delta

    def test_mu(self):
        assert mu_constant() == pytest.approx(math.sqrt(math.pi / 2) * math.log(2), abs=1e-15)
        assert mu_constant() == pytest.approx(0.8687311606, abs=1e-10)


class TestGe:
    def test_cdf(self):
        g = GeParams(0.1)
        assert ge_cdf(g, 0.5) == pytest.approx(0.6)
        assert ge_cdf(GeParams(0.0), 0.37) == 0.37
        for e in (-0.4, 0.1, 0.3):
            lo = (1 + 2 * e) * 0.5
            hi = (1 - 2 * e) * 0.5 + 2 * e
            assert lo == pytest.approx(hi) == pytest.approx(0.5 + e)
        assert ge_cdf(g, 1.0) == pytest.approx(1.0) and ge_cdf(g, 0.0) == 0.0

    def test_sample_inverse(self):
        g = GeParams(0.1)
        assert ge_sample(g, 0.55) == pytest.approx(0.55 / 1.2, abs=1e-15)
        u = np.random.default_rng(0).random(1000)
        assert np.allclose(ge_cdf(g, ge_sample(g, u)), u, atol=1e-14)
        assert np.array_equal(ge_sample(GeParams(0.0), u), u)

    def test_sample_distribution(self):
        g = GeParams(0.1)
        x = np.sort(ge_sample(g, np.random.default_rng(42).random(10 ** 6)))
        m = x.size
        F = ge_cdf(g, x)
        sup = max(np.max(np.arange(1, m + 1) / m - F), np.max(F - np.arange(m) / m))
        assert sup < 2 / math.sqrt(m)

    def test_rejects_bad_e(self):
        with pytest.raises(InvalidParameter):
            GeParams(1.0)


class TestStepDistribution:
    def test_sampling_reproduces_masses(self):
        G = exact_distribution_frequency(30)
        counts = G.sample_counts(np.random.default_rng(1), 10 ** 6)
        sigma = np.sqrt(G.masses * (1 - G.masses) * 10 ** 6)
        assert np.all(np.abs(counts - G.masses * 10 ** 6) <= 4 * sigma + 1e-9)
        x = G.sample(np.random.default_rng(2), 10 ** 6)
        vals, c = np.unique(x, return_counts=True)
        assert set(vals.tolist()) <= set(G.values.tolist())
        for v, k in zip(vals, c):
            j = int(np.searchsorted(G.values, v))
            assert abs(k - G.masses[j] * 10 ** 6) <= 4 * sigma[j]

    def test_merge_and_fold(self):
        G = StepDistribution.from_atoms([0.5, 0.2, 0.5, 0.9], [0.25, 0.25, 0.5 - 1e-20, 1e-20])
        assert G.values.tolist() == [0.2, 0.5]
        assert G.masses.tolist() == pytest.approx([0.25, 0.75], abs=1e-15)

    def test_cdf_right_continuous(self):
        G = exact_distribution_frequency(2)
        assert G.cdf(G.values[0]) == 0.5
        assert G.cdf_left(G.values[0]) == 0.0
        assert G.cdf(0.0) == 0.0 and G.cdf(1.0) == pytest.approx(1.0)

    def test_text_round_trip(self, tmp_path):
        G = exact_distribution_rank(10 * 1024)
        text = G.to_text()
        first = next(line for line in text.splitlines() if not line.startswith("#"))
        assert len(first.split()) == 3
        H = StepDistribution.from_text(text)
        assert np.array_equal(G.values, H.values) and np.array_equal(G.masses, H.masses)
        G.write(tmp_path / "g.txt")
        assert np.array_equal(StepDistribution.read(tmp_path / "g.txt").cumulative, G.cumulative)

    def test_dispatch(self):
        assert exact_distribution("frequency", 10).size == exact_distribution_frequency(10).size
        with pytest.raises(InvalidParameter):
            exact_distribution("runs", 100)


def test_default_params_unaffected():
    assert Level1Params().frequency_min_n == 100


@pytest.mark.slow
def test_mu_monte_carlo():
    from secondlevel.campaign import monte_carlo_delta
    res = monte_carlo_delta(GeParams(0.0), 10 ** 4, 10 ** 4, seed=8)
    assert abs(res.mean_dg - mu_constant()) < 0.01
