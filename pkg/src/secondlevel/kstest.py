"""One- and two-sample Kolmogorov-Smirnov tests on p-value samples."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from ._version import __version__
from .errors import InvalidParameter
from .numerics import kolmogorov_sf, ks_boundary
from .theory import StepDistribution


@dataclass(frozen=True, eq=False)
class PValueSample:
    """p-values stored sorted ascending."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if v.size < 1:
            raise InvalidParameter("a p-value sample needs at least one value")
        if not (v[0] >= 0.0 and v[-1] <= 1.0):
            raise InvalidParameter("p-values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.m

    def __eq__(self, other):
        if not isinstance(other, PValueSample):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None


class Ecdf:
    """Right-continuous empirical CDF of a PValueSample."""

    def __init__(self, sample: PValueSample):
        self.sample = sample

    def __call__(self, x):
        v = self.sample.values
        out = np.searchsorted(v, x, side="right") / v.size
        return out if np.ndim(out) else float(out)

    def left(self, x):
        v = self.sample.values
        out = np.searchsorted(v, x, side="left") / v.size
        return out if np.ndim(out) else float(out)


def ecdf_eval(e: Ecdf, x):
    return e(x)


@dataclass(frozen=True)
class ReferenceDistribution:
    """Null distribution for the one-sample test.

    kind is ``uniform``, ``step`` (payload: StepDistribution), ``empirical``
    (payload: PValueSample) or ``continuous`` (payload: a vectorised CDF).
    """

    kind: str = "uniform"
    payload: StepDistribution | PValueSample | Callable | None = None

    def __post_init__(self):
        expected = {"uniform": type(None), "step": StepDistribution, "empirical": PValueSample}
        if self.kind == "continuous":
            if not callable(self.payload):
                raise InvalidParameter("continuous reference needs a CDF callable")
        elif self.kind not in expected or not isinstance(self.payload, expected[self.kind]):
            raise InvalidParameter(f"bad reference {self.kind!r} with payload {type(self.payload).__name__}")

    def cdf(self, x):
        if self.kind == "uniform":
            return np.clip(x, 0.0, 1.0)
        if self.kind == "step":
            return self.payload.cdf(x)
        if self.kind == "empirical":
            return Ecdf(self.payload)(x)
        return self.payload(x)


UNIFORM = ReferenceDistribution()


@dataclass(frozen=True)
class KsResult:
    statistic: float
    effective_m: float
    p_value: float
    accepted: bool
    alpha: float
    sup: float


def _result(sup: float, eff: float, alpha: float) -> KsResult:
    stat = math.sqrt(eff) * sup
    return KsResult(stat, eff, kolmogorov_sf(stat), stat <= ks_boundary(alpha), alpha, sup)


def sup_vs_step(values: np.ndarray, G: StepDistribution) -> float:
    """sup_x |ECDF(x) - G(x)| for a sorted sample against a step CDF.

    Both functions are right-continuous steps, so the gap is checked at
    every jump of either one, from the right and from the left.
    """
    pts = np.union1d(values, G.values)
    m = values.size
    right = np.abs(np.searchsorted(values, pts, side="right") / m - G.cdf(pts))
    left = np.abs(np.searchsorted(values, pts, side="left") / m - G.cdf_left(pts))
    return float(max(right.max(), left.max()))


def one_sample_sup(values: np.ndarray, F: ReferenceDistribution) -> float:
    if F.kind == "uniform":
        return kernels.sup_continuous(np.clip(values, 0.0, 1.0))
    if F.kind == "continuous":
        return kernels.sup_continuous(np.asarray(F.payload(values), dtype=np.float64))
    if F.kind == "step":
        return sup_vs_step(values, F.payload)
    return kernels.sup_two_sample(values, F.payload.values)


def ks_one_sample(p: PValueSample, F: ReferenceDistribution = UNIFORM, alpha: float = 0.01) -> KsResult:
    """D_F = sqrt(m) * sup |G_{p,m} - F| with the asymptotic Kolmogorov p-value."""
    return _result(one_sample_sup(p.values, F), p.m, alpha)


def ks_two_sample(p: PValueSample, q: PValueSample, alpha: float = 0.01) -> KsResult:
    """sqrt(m m' / (m + m')) * sup |G_{p,m} - G_{q,m'}| via a merge of the sorted samples."""
    sup = kernels.sup_two_sample(p.values, q.values)
    return _result(sup, p.m * q.m / (p.m + q.m), alpha)


def decide(statistic: float, alpha: float) -> bool:
    """Acceptance rule: statistic <= K(alpha)."""
    return statistic <= ks_boundary(alpha)


# -- p-value files: little-endian float64 records + JSON sidecar ----------------------


def write_pvalues(path, sample: PValueSample, meta: dict | None = None):
    path = Path(path)
    path.write_bytes(sample.values.astype("<f8").tobytes())
    side = dict(sample.provenance)
    side.update(meta or {})
    side["m"] = sample.m
    side["sorted"] = True
    side.setdefault("toolkit_version", __version__)
    path.with_name(path.name + ".json").write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return path


def read_pvalues(path) -> PValueSample:
    path = Path(path)
    side_path = path.with_name(path.name + ".json")
    meta = json.loads(side_path.read_text()) if side_path.exists() else {}
    values = np.frombuffer(path.read_bytes(), dtype="<f8").astype(np.float64)
    return PValueSample(values, meta)
