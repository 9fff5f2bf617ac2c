"""Parameter defaults for the first-level tests.

At n >= 10**6 every default equals the SP800-22 recommendation. Below that,
the block-length parameters shrink by the rules in ``resolve``. Every value
can be overridden explicitly.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Level1Params:
    frequency_min_n: int = 100
    block_frequency_m: int = 128
    non_overlapping_m: int = 9
    non_overlapping_blocks: int = 8
    overlapping_m: int | None = None
    overlapping_block: int | None = None
    overlapping_classes: int = 5
    universal_l: int | None = None
    universal_q: int | None = None
    linear_complexity_m: int | None = None
    serial_m: int | None = None
    apen_m: int | None = None

    def resolve(self, n: int) -> "Level1Params":
        """Fill every ``None`` with the length-dependent default for n."""
        lg = int(math.floor(math.log2(max(n, 2))))
        ov_m = self.overlapping_m
        if ov_m is None:
            # block = 2^(m+1) + m - 1 keeps the expected count near 2 and
            # gives 1032 at m = 9; take the largest m that still fits
            # 100 blocks (at most 9)
            ov_m = 2
            for m in range(2, 10):
                if 100 * (2 ** (m + 1) + m - 1) <= n:
                    ov_m = m
        ov_block = self.overlapping_block
        if ov_block is None:
            ov_block = 2 ** (ov_m + 1) + ov_m - 1
        ul = self.universal_l
        if ul is None:
            # largest L with n >= 1010 * 2^L * L (reproduces the SP800-22 table);
            # below n = 387840 the table asks for L < 6, where the variance
            # correction is poor, so use the largest L <= 6 that still leaves
            # 1000 test blocks
            ul = 1
            for L in range(1, 17):
                if n >= 1010 * 2 ** L * L:
                    ul = L
            if ul < 6:
                for L in range(1, 7):
                    if n >= L * (10 * 2 ** L + 1000):
                        ul = max(ul, L)
        uq = self.universal_q if self.universal_q is not None else 10 * 2 ** ul
        lc_m = self.linear_complexity_m
        if lc_m is None:
            # 500 whenever that still gives 200 blocks, else n // 200
            lc_m = 500 if n >= 500 * 200 else max(20, n // 200)
        serial_m = self.serial_m if self.serial_m is not None else max(3, min(16, lg - 3))
        apen_m = self.apen_m if self.apen_m is not None else max(2, min(10, lg - 6))
        return replace(
            self,
            overlapping_m=ov_m,
            overlapping_block=ov_block,
            universal_l=ul,
            universal_q=uq,
            linear_complexity_m=lc_m,
            serial_m=serial_m,
            apen_m=apen_m,
        )

    def as_dict(self) -> dict:
        return asdict(self)
