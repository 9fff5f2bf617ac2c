"""Bit sequence generators.

Two families are provided:

* ``baseline-prng``: MT19937-64, bits taken least-significant first from each
  64-bit output word.
* ``true-orbit``: the Bernoulli map x -> 2x mod 1 iterated exactly on a
  quadratic irrational x0 = frac(sqrt(D)).  The symbol stream is the binary
  expansion of x0, so bulk generation can use an integer square root instead
  of stepping the orbit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidParameter

MASK64 = (1 << 64) - 1
BASELINE = "baseline-prng"
TRUE_ORBIT = "true-orbit"
KINDS = (BASELINE, TRUE_ORBIT)


@dataclass(frozen=True)
class BitSequence:
    """A binary sequence; ``bits[i]`` is the i-th generated symbol."""

    bits: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or b.size < 1:
            raise InvalidParameter("a bit sequence needs at least one bit")
        if b.max() > 1:
            raise InvalidParameter("bits must be 0 or 1")
        object.__setattr__(self, "bits", b)

    @property
    def n(self) -> int:
        return int(self.bits.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, BitSequence) and np.array_equal(self.bits, other.bits)

    def packed(self) -> bytes:
        """Little-endian packing: bit 0 is the least significant bit of byte 0."""
        return np.packbits(self.bits, bitorder="little").tobytes()

    @classmethod
    def from_packed(cls, data: bytes, n: int, meta: dict | None = None) -> "BitSequence":
        raw = np.frombuffer(data, dtype=np.uint8)
        if raw.size * 8 < n:
            raise InvalidParameter(f"{raw.size} bytes cannot hold {n} bits")
        return cls(np.unpackbits(raw, bitorder="little")[:n], meta or {})

    @classmethod
    def from_string(cls, s: str) -> "BitSequence":
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self) -> str:
        return (self.bits + ord("0")).tobytes().decode("ascii")


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate. ``seed`` is the MT seed or the 1-based orbit index."""

    kind: str
    seed: int
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise InvalidParameter(f"sequence length must be >= 1, got {self.n}")
        if self.kind == BASELINE and not 0 <= self.seed <= MASK64:
            raise InvalidParameter("baseline seed must be an unsigned 64-bit integer")
        if self.kind == TRUE_ORBIT and self.seed < 1:
            raise InvalidParameter("orbit index is 1-based")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "seed": int(self.seed), "n": int(self.n)}


# --------------------------------------------------------------------------
# MT19937-64
# --------------------------------------------------------------------------


class MT19937_64:
    """64-bit Mersenne Twister (Matsumoto & Nishimura reference algorithm)."""

    def __init__(self, seed: int = 5489):
        self.mt = np.empty(kernels.MT_N, dtype=np.uint64)
        self.seed(seed)

    def seed(self, seed: int) -> None:
        mt = [seed & MASK64]
        for i in range(1, kernels.MT_N):
            prev = mt[-1]
            mt.append((6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK64)
        self.mt[:] = mt
        self.index = kernels.MT_N

    @classmethod
    def from_key(cls, key) -> "MT19937_64":
        """Seed from an array of 64-bit integers (``init_by_array64``)."""
        if len(key) == 0:
            raise InvalidParameter("empty seed key")
        g = cls(19650218)
        mt = [int(v) for v in g.mt]
        nn = kernels.MT_N
        i, j = 1, 0
        for _ in range(max(nn, len(key))):
            prev = mt[i - 1]
            mt[i] = ((mt[i] ^ ((prev ^ (prev >> 62)) * 3935559000370003845)) + int(key[j]) + j) & MASK64
            i += 1
            j += 1
            if i >= nn:
                mt[0] = mt[nn - 1]
                i = 1
            if j >= len(key):
                j = 0
        for _ in range(nn - 1):
            prev = mt[i - 1]
            mt[i] = ((mt[i] ^ ((prev ^ (prev >> 62)) * 2862933555777941757)) - i) & MASK64
            i += 1
            if i >= nn:
                mt[0] = mt[nn - 1]
                i = 1
        mt[0] = 1 << 63
        g.mt[:] = mt
        g.index = nn
        return g

    def words(self, count: int) -> np.ndarray:
        out, self.index = kernels.mt64_fill(self.mt, self.index, count)
        return out

    def next64(self) -> int:
        return int(self.words(1)[0])

    def bits(self, n: int) -> np.ndarray:
        w = self.words(-(-n // 64)).astype("<u8", copy=False)
        return np.unpackbits(w.view(np.uint8), bitorder="little")[:n]


def generate_baseline(spec: GeneratorSpec) -> BitSequence:
    if spec.kind != BASELINE:
        raise InvalidParameter(f"generate_baseline got a {spec.kind} spec")
    return BitSequence(MT19937_64(spec.seed).bits(spec.n), spec.as_dict())


# --------------------------------------------------------------------------
# Exact Bernoulli-map orbits on quadratic irrationals
# --------------------------------------------------------------------------


def _sign_surd(a: int, b: int, D: int) -> int:
    """Sign of a + b*sqrt(D) using integers only."""
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return (b > 0) - (b < 0)
    if (a > 0) == (b > 0):
        return 1 if a > 0 else -1
    # opposite signs: compare a^2 with b^2 D
    diff = a * a - b * b * D
    s = (diff > 0) - (diff < 0)
    return s if a > 0 else -s


def _is_square_free(D: int) -> bool:
    if D < 2:
        return False
    k = 2
    while k * k <= D:
        if D % (k * k) == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class QuadraticIrrational:
    """The number (a + b*sqrt(D)) / c, held exactly.

    ``b == 0`` gives a rational (eventually periodic) state; D is then
    irrelevant but still has to be a valid square-free integer.
    """

    a: int
    b: int
    c: int
    D: int = 2

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidParameter("denominator must be positive")
        g = math.gcd(math.gcd(self.a, self.b), self.c)
        if g > 1:
            object.__setattr__(self, "a", self.a // g)
            object.__setattr__(self, "b", self.b // g)
            object.__setattr__(self, "c", self.c // g)

    @classmethod
    def frac_sqrt(cls, D: int) -> "QuadraticIrrational":
        """frac(sqrt(D)) for square-free D >= 2."""
        if not _is_square_free(D):
            raise InvalidParameter(f"D = {D} is not square-free")
        return cls(-math.isqrt(D), 1, 1, D)

    def sign_vs(self, num: int, den: int) -> int:
        """Sign of x - num/den."""
        return _sign_surd(self.a * den - num * self.c, self.b * den, self.D)

    def in_unit_interval(self) -> bool:
        return self.sign_vs(0, 1) >= 0 and self.sign_vs(1, 1) < 0

    def __float__(self):
        return (self.a + self.b * math.sqrt(self.D)) / self.c


def orbit_bit(x: QuadraticIrrational) -> int:
    """0 when x < 1/2, otherwise 1."""
    return 0 if x.sign_vs(1, 2) < 0 else 1


def orbit_step(x: QuadraticIrrational) -> QuadraticIrrational:
    """Exact 2x mod 1 for 0 <= x < 1."""
    a, b = 2 * x.a, 2 * x.b
    if _sign_surd(a - x.c, b, x.D) >= 0:
        a -= x.c
    return QuadraticIrrational(a, b, x.c, x.D)


def orbit_bits(x0: QuadraticIrrational, n: int) -> np.ndarray:
    """First n symbols of the orbit of x0, by exact stepping.

    The denominator is fixed along the orbit, so the loop keeps the
    numerator pair as plain ints and skips re-normalisation.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if not x0.in_unit_interval():
        raise InvalidParameter("initial state must lie in [0, 1)")
    a, b, c, D = x0.a, x0.b, x0.c, x0.D
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        a, b = 2 * a, 2 * b
        if _sign_surd(a - c, b, D) >= 0:
            out[i] = 1
            a -= c
        else:
            out[i] = 0
    return out


def sqrt_expansion_bits(D: int, n: int) -> np.ndarray:
    """First n fractional binary digits of sqrt(D) via one integer square root."""
    r = math.isqrt(D << (2 * n))
    frac = r - (math.isqrt(D) << n)
    raw = np.frombuffer(frac.to_bytes(-(-n // 8) or 1, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:n]
    return bits[::-1].copy()


@lru_cache(maxsize=8)
def _square_free_table(limit: int) -> np.ndarray:
    ok = np.ones(limit + 1, dtype=bool)
    ok[:2] = False
    k = 2
    while k * k <= limit:
        ok[k * k::k * k] = False
        k += 1
    return np.flatnonzero(ok)


def orbit_discriminant(index: int) -> int:
    """D_index: the index-th square-free integer >= 2 (index is 1-based)."""
    if index < 1:
        raise InvalidParameter("orbit index is 1-based")
    limit = 64
    while True:
        table = _square_free_table(limit)
        if table.size >= index:
            return int(table[index - 1])
        limit = max(2 * limit, int(index * 1.7) + 64)


def generate_true_orbit(spec: GeneratorSpec, method: str = "isqrt") -> BitSequence:
    """Symbols of the exact orbit started at frac(sqrt(D_j)), j = spec.seed.

    ``method="isqrt"`` reads the binary expansion off an integer square
    root; ``method="step"`` iterates the map on the exact state.  Both give
    identical bits.
    """
    if spec.kind != TRUE_ORBIT:
        raise InvalidParameter(f"generate_true_orbit got a {spec.kind} spec")
    D = orbit_discriminant(spec.seed)
    if method == "isqrt":
        bits = sqrt_expansion_bits(D, spec.n)
    elif method == "step":
        bits = orbit_bits(QuadraticIrrational.frac_sqrt(D), spec.n)
    else:
        raise InvalidParameter(f"unknown orbit method {method!r}")
    return BitSequence(bits, dict(spec.as_dict(), D=D))


def generate(spec: GeneratorSpec) -> BitSequence:
    if spec.kind == BASELINE:
        return generate_baseline(spec)
    return generate_true_orbit(spec)


# --------------------------------------------------------------------------
# Sequence files: packed bits plus a JSON sidecar
# --------------------------------------------------------------------------


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_sequence(path, seq: BitSequence, spec: GeneratorSpec | None = None) -> Path:
    path = Path(path)
    meta = dict(seq.meta)
    if spec is not None:
        meta.update(spec.as_dict())
    meta["n"] = seq.n
    meta.setdefault("kind", None)
    meta.setdefault("seed", None)
    path.write_bytes(seq.packed())
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def read_sequence(path) -> BitSequence:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    return BitSequence.from_packed(path.read_bytes(), int(meta["n"]), meta)
