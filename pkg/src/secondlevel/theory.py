"""Exact p-value distributions and the deviation bound sqrt(m) * d.

A first-level test whose statistic is discrete has a step-shaped p-value
distribution G.  ``compute_d`` measures its sup-distance from the reference
(uniform by default); ``delta_bound`` and ``safe_sample_size`` turn that
distance into the bias of the one-sample K-S statistic and the largest
sample size that keeps the bias below a tolerated level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._jit import njit
from .errors import InvalidParameter
from .level1 import frequency_pvalue, rank_class_probabilities, rank_pvalue

TINY_MASS = 1e-18


@njit(cache=True)
def _kahan_cumsum(x):
    out = np.empty(x.size)
    s = 0.0
    c = 0.0
    for i in range(x.size):
        y = x[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


@dataclass(frozen=True)
class StepDistribution:
    """Discrete distribution on [0, 1]: strictly increasing atoms with masses."""

    values: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_atoms(cls, values, masses, fold_below: float = TINY_MASS) -> "StepDistribution":
        """Sort, merge equal values, fold masses below ``fold_below`` into a neighbour."""
        values = np.asarray(values, dtype=np.float64)
        masses = np.asarray(masses, dtype=np.float64)
        if values.shape != masses.shape or values.size == 0:
            raise InvalidParameter("need matching, non-empty value and mass arrays")
        if np.any(masses < 0) or np.any((values < 0) | (values > 1)):
            raise InvalidParameter("masses must be >= 0 and values in [0, 1]")
        order = np.argsort(values, kind="stable")
        values, masses = values[order], masses[order]
        uniq, start = np.unique(values, return_index=True)
        merged = np.add.reduceat(masses, start)
        keep = merged >= fold_below
        if not keep.any():
            keep[np.argmax(merged)] = True
        if not keep.all():
            kept_idx = np.flatnonzero(keep)
            drop_idx = np.flatnonzero(~keep)
            # nearest retained atom by value
            pos = np.searchsorted(uniq[kept_idx], uniq[drop_idx])
            lo = kept_idx[np.clip(pos - 1, 0, kept_idx.size - 1)]
            hi = kept_idx[np.clip(pos, 0, kept_idx.size - 1)]
            target = np.where(np.abs(uniq[drop_idx] - uniq[lo]) <= np.abs(uniq[hi] - uniq[drop_idx]), lo, hi)
            np.add.at(merged, target, merged[drop_idx])
            uniq, merged = uniq[keep], merged[keep]
        cum = _kahan_cumsum(merged)
        return cls(uniq, merged, cum)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def cdf(self, x):
        """Right-continuous CDF."""
        idx = np.searchsorted(self.values, x, side="right")
        cum = np.concatenate([[0.0], self.cumulative])
        return cum[idx]

    def cdf_left(self, x):
        """Left limit G(x-)."""
        idx = np.searchsorted(self.values, x, side="left")
        cum = np.concatenate([[0.0], self.cumulative])
        return cum[idx]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw p-values by binary search of uniforms in the cumulative table."""
        u = rng.random(size) * self.cumulative[-1]
        idx = np.minimum(np.searchsorted(self.cumulative, u, side="right"), self.size - 1)
        return self.values[idx]

    def sample_counts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Per-atom counts of ``size`` draws (same draws as ``sample``)."""
        u = rng.random(size) * self.cumulative[-1]
        idx = np.minimum(np.searchsorted(self.cumulative, u, side="right"), self.size - 1)
        return np.bincount(idx, minlength=self.size)

    def to_text(self) -> str:
        lines = ["# p_value mass cumulative"]
        lines += [f"{v:.17g} {m:.17g} {c:.17g}" for v, m, c in zip(self.values, self.masses, self.cumulative)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StepDistribution":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path) -> "StepDistribution":
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class GeParams:
    """Piecewise-linear toy distribution G_e; sup-distance from uniform is |e|."""

    e: float

    def __post_init__(self):
        if not abs(self.e) < 1:
            raise InvalidParameter(f"|e| must be < 1, got {self.e}")


@dataclass(frozen=True)
class DeviationBound:
    d: float
    attained_at: float
    reference: str = "uniform"


# -- exact distributions ---------------------------------------------------------


def exact_distribution_frequency(n: int) -> StepDistribution:
    """Distribution of the frequency-test p-value for n fair bits."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    k = np.arange(n + 1)
    mass_k = stats.binom.pmf(k, n, 0.5)
    s_abs = np.abs(2 * k - n)
    # merge +S and -S before evaluating the p-value once per |S|
    mass_s = np.bincount(s_abs, weights=mass_k, minlength=n + 1)
    present = np.flatnonzero(np.arange(n + 1) % 2 == n % 2)
    live = present[mass_s[present] >= TINY_MASS]
    # folded tail goes into the smallest retained atom (largest retained |S|)
    tail = mass_s[present[mass_s[present] < TINY_MASS]].sum()
    vals = np.array([frequency_pvalue(int(s), n) for s in live])
    masses = mass_s[live].copy()
    if tail > 0:
        masses[np.argmin(vals)] += tail
    return StepDistribution.from_atoms(vals, masses, fold_below=0.0)


def exact_distribution_rank(n: int, size: int = 32) -> StepDistribution:
    """Distribution of the binary-matrix-rank p-value; N = n // size^2 matrices."""
    N = n // (size * size)
    if N < 1:
        raise InvalidParameter(f"need at least one {size}x{size} matrix, n = {n}")
    pis = rank_class_probabilities(size)
    # every (full, full - 1, lower) count triple with sum N
    a = np.concatenate([np.full(N + 1 - i, i) for i in range(N + 1)])
    b = np.concatenate([np.arange(N + 1 - i) for i in range(N + 1)])
    c = N - a - b
    # trinomial mass factored as binomial(N, a) * binomial(N - a, b | not full rank)
    masses = stats.binom.pmf(a, N, pis[0]) * stats.binom.pmf(b, N - a, pis[1] / (pis[1] + pis[2]))
    # same arithmetic, in the same order, as level1.rank_chi2 so p-values match bit for bit
    e0, e1, e2 = N * pis[0], N * pis[1], N * pis[2]
    chi2 = (a - e0) ** 2 / e0 + (b - e1) ** 2 / e1 + (c - e2) ** 2 / e2
    values = np.fromiter((rank_pvalue(float(x)) for x in chi2), dtype=np.float64, count=chi2.size)
    return StepDistribution.from_atoms(values, masses)


# -- deviation constant and derived quantities --------------------------------------


def ge_cdf(params: GeParams, x):
    e = params.e
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x <= 0.5, (1 + 2 * e) * x, (1 - 2 * e) * x + 2 * e)
    return out if out.ndim else float(out)


def ge_sample(params: GeParams, u):
    """Inverse-CDF transform of uniforms in [0, 1)."""
    e = params.e
    u = np.asarray(u, dtype=np.float64)
    out = np.where(u <= (1 + 2 * e) / 2, u / (1 + 2 * e), (u - 2 * e) / (1 - 2 * e))
    return out if out.ndim else float(out)


def _d_step_uniform(G: StepDistribution) -> DeviationBound:
    prev = np.concatenate([[0.0], G.cumulative[:-1]])
    right = np.abs(G.cumulative - G.values)
    left = np.abs(prev - G.values)
    gap = np.maximum(right, left)
    k = int(np.argmax(gap))
    return DeviationBound(float(gap[k]), float(G.values[k]), "uniform")


def _d_step_step(G: StepDistribution, F: StepDistribution) -> DeviationBound:
    pts = np.union1d(G.values, F.values)
    gap = np.abs(G.cdf(pts) - F.cdf(pts))
    k = int(np.argmax(gap))
    return DeviationBound(float(gap[k]), float(pts[k]), "step")


def compute_d(G, F=None) -> DeviationBound:
    """sup_x |G(x) - F(x)| for G a StepDistribution or GeParams.

    F is None / a uniform reference, or a step reference.
    """
    ref_kind = "uniform" if F is None else getattr(F, "kind", "step")
    if isinstance(G, GeParams):
        if ref_kind != "uniform":
            raise InvalidParameter("G_e is only compared with the uniform reference")
        return DeviationBound(abs(G.e), 0.5, "uniform")
    if not isinstance(G, StepDistribution):
        raise InvalidParameter(f"cannot compute d for {type(G).__name__}")
    if ref_kind == "uniform":
        return _d_step_uniform(G)
    step = F if isinstance(F, StepDistribution) else F.payload
    if not isinstance(step, StepDistribution):
        raise InvalidParameter("step-vs-empirical deviation is not defined here")
    return _d_step_step(G, step)


def delta_bound(m: int, d: float) -> float:
    """Upper bound sqrt(m) * d on E[D_F] - E[D_G]."""
    if m < 1 or d < 0:
        raise InvalidParameter("need m >= 1 and d >= 0")
    return math.sqrt(m) * d


def safe_sample_size(delta: float, d: float):
    """Largest m with sqrt(m) * d <= delta, i.e. floor((delta/d)^2).

    Returns ``math.inf`` when d == 0 (no sample size limit).
    """
    if not delta > 0 or d < 0:
        raise InvalidParameter("need delta > 0 and d >= 0")
    if d == 0:
        return math.inf
    m = int(math.floor((delta / d) ** 2))
    # floating point can land one off the floor
    while m > 0 and delta_bound(m, d) > delta:
        m -= 1
    while delta_bound(m + 1, d) <= delta:
        m += 1
    return m


def mu_constant() -> float:
    """Limit of E[D_G]: sqrt(pi/2) * ln 2."""
    return math.sqrt(math.pi / 2.0) * math.log(2.0)


def exact_distribution(test: str, n: int) -> StepDistribution:
    if test in ("frequency", "monobit"):
        return exact_distribution_frequency(n)
    if test in ("rank", "binary_matrix_rank"):
        return exact_distribution_rank(n)
    raise InvalidParameter(f"no exact distribution for {test!r} (frequency and rank only)")


__all__ = [
    "DeviationBound",
    "GeParams",
    "StepDistribution",
    "compute_d",
    "delta_bound",
    "exact_distribution",
    "exact_distribution_frequency",
    "exact_distribution_rank",
    "ge_cdf",
    "ge_sample",
    "mu_constant",
    "safe_sample_size",
]
