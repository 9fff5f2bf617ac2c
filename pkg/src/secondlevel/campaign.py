"""Experiment orchestration: reference builds, second-level runs, Monte Carlo.

Seed policy
-----------
Sequence i of repetition r under master seed s is generated by MT19937-64
seeded with ``mix_seed(s, r, i)``, where

    mix_seed(s, r, i) = splitmix64(splitmix64(splitmix64(s) ^ r) ^ i)

Reference (true-orbit) sequence i uses orbit index ``orbit_offset + i``.
Monte Carlo trial t uses ``numpy.random.default_rng([seed, t])``.  All
randomness is fixed before any work is scheduled, so the worker count never
changes a result.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import kernels
from .bitsource import BASELINE, TRUE_ORBIT, GeneratorSpec, generate
from .errors import InvalidParameter, MissingReference
from .kstest import (
    UNIFORM,
    PValueSample,
    ReferenceDistribution,
    ks_one_sample,
    ks_two_sample,
    read_pvalues,
    write_pvalues,
)
from .level1 import Level1Params, Level1TestId, run_level1
from .numerics import ks_boundary
from .theory import GeParams, StepDistribution, compute_d, exact_distribution, ge_cdf, ge_sample

MASK64 = (1 << 64) - 1
MODES = ("one-sample-uniform", "one-sample-exact", "two-sample")


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master: int, rep: int, index: int) -> int:
    return splitmix64(splitmix64(splitmix64(master & MASK64) ^ rep) ^ index)


@dataclass
class CampaignConfig:
    tests: list = field(default_factory=lambda: ["frequency"])
    n: int = 10_000
    m: int = 1000
    m_ref: int = 1000
    repetitions: int = 10
    alphas: list = field(default_factory=lambda: [0.01, 0.0001])
    master_seed: int = 20190917
    orbit_offset: int = 1
    threads: int = 1
    params: dict = field(default_factory=dict)
    source: str = "generator"

    def __post_init__(self):
        if isinstance(self.tests, str):
            self.tests = [self.tests]
        self.tests = [str(Level1TestId.parse(t)) for t in self.tests]
        for name in ("n", "m", "m_ref", "repetitions", "orbit_offset", "threads"):
            if getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must be >= 1")
        if not all(0 < a < 1 for a in self.alphas):
            raise InvalidParameter("alpha levels must lie in (0, 1)")
        if self.source not in ("generator", "synthetic"):
            raise InvalidParameter(f"unknown p-value source {self.source!r}")

    @property
    def level1_params(self) -> Level1Params:
        return Level1Params(**self.params)

    def effective(self) -> dict:
        """Config with every default materialised, including resolved level-1 parameters."""
        d = asdict(self)
        d["params"] = self.level1_params.resolve(self.n).as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


# -- first-level fan-out ------------------------------------------------------------


def _pvalue_chunk(job):
    kind, seeds, n, tests, params = job
    out = np.empty((len(tests), len(seeds)))
    for j, seed in enumerate(seeds):
        seq = generate(GeneratorSpec(kind, seed, n))
        for t, test in enumerate(tests):
            out[t, j] = run_level1(test, seq, params).p_value
    return out


def first_level_pvalues(kind: str, seeds, n: int, tests, params: Level1Params | None = None,
                        threads: int = 1) -> dict:
    """p-values of every test on every generated sequence, in seed order."""
    tests = [str(Level1TestId.parse(t)) for t in tests]
    params = params or Level1Params()
    seeds = list(seeds)
    if threads <= 1 or len(seeds) < 2:
        arr = _pvalue_chunk((kind, seeds, n, tests, params))
    else:
        size = -(-len(seeds) // (threads * 4))
        jobs = [(kind, seeds[k:k + size], n, tests, params) for k in range(0, len(seeds), size)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            arr = np.concatenate(list(pool.map(_pvalue_chunk, jobs)), axis=1)
    return {t: arr[i] for i, t in enumerate(tests)}


def baseline_seeds(master: int, rep: int, m: int) -> list:
    return [mix_seed(master, rep, i) for i in range(m)]


def orbit_indices(offset: int, m: int) -> list:
    return list(range(offset, offset + m))


# -- references -------------------------------------------------------------------------


def build_reference(config: CampaignConfig, test: str | None = None, out=None) -> PValueSample:
    """Empirical reference from m_ref true-orbit sequences of length n.

    When ``out`` is given the sample is written there; the file appears only
    after the whole build succeeded.
    """
    test = str(Level1TestId.parse(test or config.tests[0]))
    pv = first_level_pvalues(TRUE_ORBIT, orbit_indices(config.orbit_offset, config.m_ref), config.n,
                             [test], config.level1_params, config.threads)[test]
    prov = {
        "test": test,
        "generator": {"kind": TRUE_ORBIT, "orbit_offset": config.orbit_offset, "n": config.n},
        "n": config.n,
        "params": config.level1_params.resolve(config.n).as_dict(),
    }
    sample = PValueSample(pv, prov)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory(dir=out.parent) as tmp:
            tmp_path = Path(tmp) / out.name
            write_pvalues(tmp_path, sample)
            os.replace(tmp_path.with_name(tmp_path.name + ".json"), out.with_name(out.name + ".json"))
            os.replace(tmp_path, out)
    return sample


# -- aggregation ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    statistics: list
    p_values: list
    mean: float
    sd: float
    passes: dict
    repetitions: int
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def aggregate(statistics, p_values, alphas, extra=None) -> ExperimentResult:
    """Mean and SD (n - 1 denominator) of the second-level p-values, pass counts per alpha."""
    p = np.asarray(p_values, dtype=float)
    s = np.asarray(statistics, dtype=float)
    sd = float(np.std(p, ddof=1)) if p.size > 1 else 0.0
    passes = {str(a): int(np.count_nonzero(s <= ks_boundary(a))) for a in alphas}
    return ExperimentResult(s.tolist(), p.tolist(), float(np.mean(p)), sd, passes, int(p.size), extra or {})


def _second_level(p: PValueSample, mode: str, reference, alpha: float):
    if mode == "one-sample-uniform":
        return ks_one_sample(p, UNIFORM, alpha)
    if mode == "one-sample-exact":
        return ks_one_sample(p, ReferenceDistribution("step", reference), alpha)
    return ks_two_sample(p, reference, alpha)


def run_second_level(config: CampaignConfig, mode: str, reference=None, test: str | None = None,
                     pvalue_cache: dict | None = None) -> ExperimentResult:
    """Repeat the second-level test ``config.repetitions`` times on fresh baseline samples.

    ``reference`` is the empirical PValueSample for two-sample mode, or an
    optional precomputed StepDistribution for one-sample-exact mode.
    ``source="synthetic"`` draws the first-level p-values straight from the
    exact distribution instead of running the generator.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown mode {mode!r}")
    test = str(Level1TestId.parse(test or config.tests[0]))
    exact = None
    if mode == "two-sample":
        if reference is None:
            raise MissingReference("two-sample mode needs a reference sample")
        if not isinstance(reference, PValueSample):
            reference = read_pvalues(reference)
    if mode == "one-sample-exact" or config.source == "synthetic":
        if isinstance(reference, StepDistribution):
            exact = reference
        else:
            try:
                exact = exact_distribution(test, config.n)
            except InvalidParameter as err:
                raise MissingReference(str(err)) from err
    ref = exact if mode == "one-sample-exact" else reference
    alpha = min(config.alphas)
    stats, pvals = [], []
    for r in range(config.repetitions):
        if config.source == "synthetic":
            values = exact.sample(np.random.default_rng([config.master_seed, r]), config.m)
        else:
            key = (test, r)
            if pvalue_cache is not None and key in pvalue_cache:
                values = pvalue_cache[key]
            else:
                values = first_level_pvalues(BASELINE, baseline_seeds(config.master_seed, r, config.m), config.n,
                                             [test], config.level1_params, config.threads)[test]
                if pvalue_cache is not None:
                    pvalue_cache[key] = values
        res = _second_level(PValueSample(values), mode, ref, alpha)
        stats.append(res.statistic)
        pvals.append(res.p_value)
    return aggregate(stats, pvals, config.alphas, {"mode": mode, "test": test})


# -- Monte Carlo study of E[D_F] - E[D_G] ------------------------------------------------------


@dataclass
class DeltaResult:
    m: int
    trials: int
    d: float
    bound: float
    mean_df: float
    mean_dg: float
    sem_df: float
    sem_dg: float
    delta: float
    sem_delta: float
    pointwise_violations: int
    d_f: np.ndarray = field(repr=False)
    d_g: np.ndarray = field(repr=False)

    @property
    def within_bound(self) -> bool:
        return self.delta <= self.bound

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("d_f")
        d.pop("d_g")
        d["within_bound"] = self.within_bound
        return d


def _trial_stats(dist, m: int, rng: np.random.Generator):
    if isinstance(dist, GeParams):
        p = np.sort(ge_sample(dist, rng.random(m)))
        return kernels.sup_continuous(p), kernels.sup_continuous(ge_cdf(dist, p))
    counts = dist.sample_counts(rng, m)
    return kernels.step_sups(dist.values, dist.cumulative, counts, m)


def monte_carlo_delta(dist, m: int, trials: int, seed: int = 0) -> DeltaResult:
    """Mean D_F (vs uniform) and D_G (vs the generating G) over ``trials`` samples of size m."""
    if m < 1 or trials < 2:
        raise InvalidParameter("need m >= 1 and trials >= 2")
    if not isinstance(dist, (GeParams, StepDistribution)):
        raise InvalidParameter("distribution must be GeParams or StepDistribution")
    d = compute_d(dist).d
    root = math.sqrt(m)
    df = np.empty(trials)
    dg = np.empty(trials)
    for t in range(trials):
        a, b = _trial_stats(dist, m, np.random.default_rng([seed, t]))
        df[t] = root * a
        dg[t] = root * b
    bound = root * d
    # triangle inequality holds per trial; allow for rounding only
    violations = int(np.count_nonzero(df > dg + bound + 1e-9))
    diff = df - dg
    return DeltaResult(
        m=m, trials=trials, d=d, bound=bound,
        mean_df=float(df.mean()), mean_dg=float(dg.mean()),
        sem_df=float(df.std(ddof=1) / math.sqrt(trials)), sem_dg=float(dg.std(ddof=1) / math.sqrt(trials)),
        delta=float(diff.mean()), sem_delta=float(diff.std(ddof=1) / math.sqrt(trials)),
        pointwise_violations=violations, d_f=df, d_g=dg,
    )


def fig2_sweep(e: float, ms, trials: int, samples: int = 1, seed: int = 0) -> list:
    """Delta_m for G_e at each m; ``samples`` independent repeats per m."""
    rows = []
    for i, m in enumerate(ms):
        for s in range(samples):
            res = monte_carlo_delta(GeParams(e), int(m), trials, seed=seed + 1000 * i + s)
            rows.append((int(m), res.delta, res.bound))
    return rows


# -- manifests ------------------------------------------------------------------------------------


def write_plot_data(path, columns, header: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        for row in zip(*columns):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def run_manifest(manifest: dict, output_dir=None) -> dict:
    """Execute a campaign manifest and write ``report.json`` plus plot data.

    Manifest keys: every CampaignConfig field, ``modes`` (subset of MODES),
    ``monte_carlo`` (list of {distribution: "ge"|"frequency"|"rank", e, n,
    m: [...], trials, samples, seed}) and ``output_dir``.
    """
    out = Path(output_dir or manifest.get("output_dir") or os.environ.get("SECONDLEVEL_OUTPUT_DIR", "secondlevel-out"))
    out.mkdir(parents=True, exist_ok=True)
    config = CampaignConfig.from_dict(manifest)
    modes = list(manifest.get("modes", ["one-sample-uniform", "two-sample"]))
    for mode in modes:
        if mode not in MODES:
            raise InvalidParameter(f"unknown mode {mode!r}")
    report = {"config": config.effective(), "modes": modes, "second_level": {}, "monte_carlo": []}
    cache: dict = {}
    for test in config.tests:
        entry = {}
        ref = None
        if "two-sample" in modes:
            ref_path = out / f"reference_{test.replace(':', '_')}.f64"
            ref = build_reference(config, test, ref_path)
            entry["reference_file"] = ref_path.name
        for mode in modes:
            try:
                res = run_second_level(config, mode, ref if mode == "two-sample" else None, test, cache)
                entry[mode] = res.as_dict()
            except MissingReference as err:
                entry[mode] = {"unavailable": str(err)}
        report["second_level"][test] = entry
    for k, spec in enumerate(manifest.get("monte_carlo", [])):
        kind = spec.get("distribution", "ge")
        dist = GeParams(float(spec["e"])) if kind == "ge" else exact_distribution(kind, int(spec["n"]))
        rows = []
        for i, m in enumerate(spec.get("m", [100, 1000])):
            for s in range(int(spec.get("samples", 1))):
                res = monte_carlo_delta(dist, int(m), int(spec.get("trials", 1000)),
                                        seed=int(spec.get("seed", 0)) + 1000 * i + s)
                rows.append(res.as_dict())
        plot = out / f"montecarlo_{k}_{kind}.dat"
        write_plot_data(plot, [[r["m"] for r in rows], [r["delta"] for r in rows], [r["bound"] for r in rows]],
                        "m delta_m sqrt(m)*d")
        report["monte_carlo"].append({"spec": spec, "results": rows, "plot_data": plot.name})
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report
