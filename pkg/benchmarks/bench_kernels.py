"""Time the numba and numpy flavour of every hot kernel on desk-scale inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed (numba compiles on first call), then the
best of ``--repeat`` runs is reported together with the speed-up.
"""
import argparse
import time

import numpy as np

from secondlevel.kernels import FLAVOURS, MT_N


def _inputs(rng):
    mt = rng.integers(0, 2 ** 63, size=MT_N, dtype=np.uint64)
    values = np.sort(rng.random(4000))
    masses = rng.random(4000)
    masses /= masses.sum()
    return {
        "mt64_fill": lambda: (mt.copy(), MT_N, 10 ** 6 // 64 * 10),
        "gf2_rank_batch": lambda: (rng.integers(0, 2 ** 32, size=(976, 32), dtype=np.uint64), 32),
        "linear_complexity": lambda: (rng.integers(0, 2, size=(200, 500), dtype=np.uint8),),
        "nonoverlapping_counts": lambda: (rng.integers(0, 2, size=(8, 125_000), dtype=np.uint8),
                                          np.array([0, 0, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8)),
        "sup_continuous": lambda: (np.sort(rng.random(10 ** 6)),),
        "sup_two_sample": lambda: (np.sort(rng.random(10 ** 6)), np.sort(rng.random(10 ** 6))),
        "step_sups": lambda: (values, np.cumsum(masses), rng.multinomial(10 ** 6, masses).astype(np.int64), 10 ** 6),
    }


def _best(fn, args, repeat):
    fn(*args())
    times = []
    for _ in range(repeat):
        a = args()
        t0 = time.perf_counter()
        fn(*a)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    inputs = _inputs(np.random.default_rng(args.seed))
    print(f"{'kernel':24s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speed-up':>9s}")
    for name, (nb, npy) in FLAVOURS.items():
        t_nb = _best(nb, inputs[name], args.repeat)
        t_np = _best(npy, inputs[name], args.repeat)
        print(f"{name:24s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:9.1f}")


if __name__ == "__main__":
    main()
