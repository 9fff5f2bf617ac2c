"""First-level randomness tests: one bit sequence in, one p-value out."""
from __future__ import annotations

from dataclasses import dataclass

from ..bitsource import BitSequence
from ..errors import InvalidParameter
from . import nist
from .nist import aperiodic_templates, frequency_pvalue, rank_chi2, rank_class_probabilities, rank_pvalue
from .params import Level1Params

# id -> (implementation, number of variants or None when it depends on params)
_TESTS = {
    "frequency": (nist.frequency, 1),
    "block_frequency": (nist.block_frequency, 1),
    "runs": (nist.runs, 1),
    "longest_run": (nist.longest_run, 1),
    "rank": (nist.binary_matrix_rank, 1),
    "dft": (nist.dft, 1),
    "non_overlapping_template": (nist.non_overlapping_template, None),
    "overlapping_template": (nist.overlapping_template, 1),
    "universal": (nist.universal, 1),
    "linear_complexity": (nist.linear_complexity, 1),
    "serial": (nist.serial, 2),
    "approximate_entropy": (nist.approximate_entropy, 1),
    "cumulative_sums": (nist.cumulative_sums, 2),
}

TEST_IDS = tuple(_TESTS)

ALIASES = {
    "monobit": "frequency",
    "binary_matrix_rank": "rank",
    "longest_run_of_ones": "longest_run",
    "spectral": "dft",
    "apen": "approximate_entropy",
    "cusum": "cumulative_sums",
}


@dataclass(frozen=True)
class Level1TestId:
    """A first-level test, plus the sub-statistic for multi-output tests (1-based)."""

    id: str
    variant: int = 1

    def __post_init__(self):
        name = ALIASES.get(self.id, self.id)
        if name not in _TESTS:
            raise InvalidParameter(f"unknown first-level test {self.id!r}")
        object.__setattr__(self, "id", name)
        nvar = _TESTS[name][1]
        if nvar is not None and not 1 <= self.variant <= nvar:
            raise InvalidParameter(f"{name} has variants 1..{nvar}, got {self.variant}")
        if self.variant < 1:
            raise InvalidParameter("variant is 1-based")

    @classmethod
    def parse(cls, text: str) -> "Level1TestId":
        """``"serial"`` or ``"serial:2"``."""
        name, _, var = text.partition(":")
        return cls(name.strip(), int(var) if var else 1)

    def __str__(self):
        return self.id if self.variant == 1 else f"{self.id}:{self.variant}"


@dataclass(frozen=True)
class Level1Result:
    test: Level1TestId
    p_value: float
    statistic: float
    n: int


def run_level1(test: Level1TestId | str, seq: BitSequence | object, params: Level1Params | None = None) -> Level1Result:
    if isinstance(test, str):
        test = Level1TestId.parse(test)
    bits = seq.bits if isinstance(seq, BitSequence) else BitSequence(seq).bits
    params = (params or Level1Params()).resolve(bits.size)
    fn = _TESTS[test.id][0]
    if test.id == "non_overlapping_template":
        pvals, stats = fn(bits, params, test.variant)
        idx = 0
    else:
        pvals, stats = fn(bits, params)
        idx = test.variant - 1
    return Level1Result(test, float(pvals[idx]), float(stats[idx]), int(bits.size))


def frequency_test(seq: BitSequence, params: Level1Params | None = None) -> Level1Result:
    return run_level1(Level1TestId("frequency"), seq, params)


def binary_matrix_rank_test(seq: BitSequence, params: Level1Params | None = None) -> Level1Result:
    return run_level1(Level1TestId("rank"), seq, params)


__all__ = [
    "Level1Params",
    "Level1Result",
    "Level1TestId",
    "TEST_IDS",
    "aperiodic_templates",
    "binary_matrix_rank_test",
    "frequency_pvalue",
    "frequency_test",
    "rank_chi2",
    "rank_class_probabilities",
    "rank_pvalue",
    "run_level1",
]
