"""Command-line interface.

Exit codes: 0 success, 1 the second-level test rejected H0, 2 usage or
configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import campaign, theory
from ._version import __version__
from .bitsource import BASELINE, TRUE_ORBIT, GeneratorSpec, generate, read_sequence, write_sequence
from .errors import InvalidParameter, MissingReference
from .kstest import UNIFORM, PValueSample, ReferenceDistribution, ks_one_sample, ks_two_sample, read_pvalues, write_pvalues
from .level1 import Level1Params, Level1TestId, run_level1
from .numerics import ks_boundary

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

_KIND_ALIASES = {"baseline": BASELINE, "baseline-prng": BASELINE, "mt": BASELINE, "true-orbit": TRUE_ORBIT}


def _g17(x) -> str:
    return f"{x:.17g}"


def _g4(x) -> str:
    return f"{x:.4g}"


def _emit(report: dict, path) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)


def _default_out(name: str) -> Path:
    return Path(os.environ.get("SECONDLEVEL_OUTPUT_DIR", ".")) / name


# -- subcommands ------------------------------------------------------------------------


def cmd_generate(args) -> int:
    kind = _KIND_ALIASES[args.kind]
    seed = args.orbit_index if kind == TRUE_ORBIT else args.seed
    if seed is None:
        raise InvalidParameter("--orbit-index is required for true-orbit" if kind == TRUE_ORBIT else "--seed is required")
    spec = GeneratorSpec(kind, seed, args.n)
    seq = generate(spec)
    out = Path(args.out) if args.out else _default_out(f"{kind}_{seed}_{args.n}.bin")
    write_sequence(out, seq, spec)
    ones = int(seq.bits.sum())
    print(f"wrote {out} ({spec.n} bits, {ones} ones, kind={kind}, seed={seed})")
    return EXIT_OK


def _params(args) -> Level1Params:
    overrides = json.loads(args.params) if getattr(args, "params", None) else {}
    return Level1Params(**overrides)


def cmd_level1(args) -> int:
    test = Level1TestId.parse(args.test)
    params = _params(args)
    if args.input:
        values = []
        n = None
        for path in args.input:
            seq = read_sequence(path)
            n = seq.n
            values.append(run_level1(test, seq, params).p_value)
        gen = {"kind": "files", "inputs": [str(p) for p in args.input]}
    else:
        if args.n is None or args.m is None:
            raise InvalidParameter("give --input files or --n and --m")
        kind = _KIND_ALIASES[args.kind]
        n = args.n
        if kind == BASELINE:
            seeds = campaign.baseline_seeds(args.master_seed, args.rep, args.m)
            gen = {"kind": kind, "master_seed": args.master_seed, "rep": args.rep}
        else:
            seeds = campaign.orbit_indices(args.orbit_offset, args.m)
            gen = {"kind": kind, "orbit_offset": args.orbit_offset}
        values = campaign.first_level_pvalues(kind, seeds, n, [str(test)], params, args.threads)[str(test)]
    sample = PValueSample(values)
    out = Path(args.out) if args.out else _default_out(f"pvalues_{str(test).replace(':', '_')}.f64")
    write_pvalues(out, sample, {"test": test.id, "variant": test.variant, "n": n, "generator": gen,
                                "params": params.resolve(n).as_dict()})
    print(f"wrote {out} ({sample.m} p-values, test={test}, mean={_g4(float(np.mean(values)))})")
    return EXIT_OK


def cmd_level2(args) -> int:
    p = read_pvalues(args.input)
    if args.mode == "two-sample":
        if args.ref in (None, "uniform", "exact"):
            raise InvalidParameter("two-sample mode needs --ref FILE")
        q = read_pvalues(args.ref)
        res = ks_two_sample(p, q, args.alpha)
        ref_desc = str(args.ref)
    else:
        ref = args.ref or "uniform"
        if ref == "uniform":
            F = UNIFORM
        elif ref == "exact":
            test = args.test or p.provenance.get("test")
            n = args.n or p.provenance.get("n")
            if test is None or n is None:
                raise InvalidParameter("--ref exact needs --test and --n (or a p-value sidecar carrying them)")
            try:
                F = ReferenceDistribution("step", theory.exact_distribution(test, int(n)))
            except InvalidParameter as err:
                raise MissingReference(str(err)) from err
        else:
            F = ReferenceDistribution("empirical", read_pvalues(ref))
        res = ks_one_sample(p, F, args.alpha)
        ref_desc = ref
    report = {
        "mode": args.mode, "input": str(args.input), "reference": ref_desc, "alpha": args.alpha,
        "m": p.m, "statistic": res.statistic, "sup": res.sup, "effective_m": res.effective_m,
        "p_value": res.p_value, "boundary": ks_boundary(args.alpha), "accepted": res.accepted,
        "version": __version__,
    }
    _emit(report, args.report)
    verdict = "accept" if res.accepted else "REJECT"
    print(f"{args.mode} ref={ref_desc} m={p.m} statistic={_g4(res.statistic)} p={_g4(res.p_value)} "
          f"K({args.alpha})={_g4(ks_boundary(args.alpha))} -> {verdict}")
    return EXIT_OK if res.accepted else EXIT_REJECT


def _exact_d(args):
    if args.d is not None:
        return args.d, None
    if args.test is None or args.n is None:
        raise InvalidParameter("give --d, or --test and --n to compute it")
    G = theory.exact_distribution(args.test, args.n)
    bound = theory.compute_d(G)
    return bound.d, bound


def cmd_theory(args) -> int:
    out: dict = {"what": args.what}
    if args.what == "mu":
        out["mu"] = theory.mu_constant()
    elif args.what == "export":
        G = theory.exact_distribution(args.test, args.n)
        path = Path(args.out) if args.out else _default_out(f"exact_{args.test}_{args.n}.txt")
        G.write(path)
        out.update(file=str(path), atoms=G.size, total_mass=G.total_mass)
    else:
        d, bound = _exact_d(args)
        out["d"] = d
        if bound is not None:
            out["attained_at"] = bound.attained_at
            out.update(test=args.test, n=args.n)
        if args.what == "delta-bound":
            if args.m is None:
                raise InvalidParameter("delta-bound needs --m")
            out.update(m=args.m, delta_bound=theory.delta_bound(args.m, d))
        elif args.what == "safe-sample-size":
            if args.delta is None:
                raise InvalidParameter("safe-sample-size needs --delta")
            size = theory.safe_sample_size(args.delta, d)
            out.update(delta=args.delta, safe_sample_size=None if math.isinf(size) else size,
                       unbounded=math.isinf(size))
        elif args.m is not None:
            out.update(m=args.m, delta_bound=theory.delta_bound(args.m, d))
    for k, v in out.items():
        print(f"{k} = {_g17(v) if isinstance(v, float) else v}")
    _emit(out, args.report)
    return EXIT_OK


def cmd_campaign(args) -> int:
    manifest = json.loads(Path(args.config).read_text())
    if args.threads is not None:
        manifest["threads"] = args.threads
    report = campaign.run_manifest(manifest, args.out)
    for test, entry in report["second_level"].items():
        for mode, res in entry.items():
            if isinstance(res, dict) and "passes" in res:
                print(f"{test:28s} {mode:20s} mean p={_g4(res['mean'])} sd={_g4(res['sd'])} passes={res['passes']}")
    for mc in report["monte_carlo"]:
        for row in mc["results"]:
            print(f"montecarlo m={row['m']} delta={_g4(row['delta'])} bound={_g4(row['bound'])}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secondlevel", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a bit sequence file")
    g.add_argument("--kind", choices=sorted(_KIND_ALIASES), required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--orbit-index", type=int)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    l1 = sub.add_parser("level1", help="first-level p-values into a p-value file")
    l1.add_argument("--test", required=True, help="test id, optionally with :variant")
    l1.add_argument("--input", nargs="+", help="sequence files")
    l1.add_argument("--kind", choices=sorted(_KIND_ALIASES), default="baseline")
    l1.add_argument("--n", type=_positive_int)
    l1.add_argument("--m", type=_positive_int)
    l1.add_argument("--master-seed", type=int, default=20190917)
    l1.add_argument("--rep", type=int, default=0)
    l1.add_argument("--orbit-offset", type=_positive_int, default=1)
    l1.add_argument("--threads", type=_positive_int, default=1)
    l1.add_argument("--params", help="JSON object of Level1Params overrides")
    l1.add_argument("--out")
    l1.set_defaults(func=cmd_level1)

    l2 = sub.add_parser("level2", help="second-level K-S test of a p-value file")
    l2.add_argument("--input", required=True)
    l2.add_argument("--mode", choices=["one-sample", "two-sample"], default="one-sample")
    l2.add_argument("--ref", help="uniform | exact | FILE")
    l2.add_argument("--test")
    l2.add_argument("--n", type=_positive_int)
    l2.add_argument("--alpha", type=float, default=0.01)
    l2.add_argument("--report")
    l2.set_defaults(func=cmd_level2)

    th = sub.add_parser("theory", help="d, sqrt(m)*d, (delta/d)^2, mu, exact distribution export")
    th.add_argument("what", choices=["compute-d", "delta-bound", "safe-sample-size", "mu", "export"])
    th.add_argument("--test")
    th.add_argument("--n", type=_positive_int)
    th.add_argument("--d", type=float)
    th.add_argument("--m", type=_positive_int)
    th.add_argument("--delta", type=float)
    th.add_argument("--out")
    th.add_argument("--report")
    th.set_defaults(func=cmd_theory)

    c = sub.add_parser("campaign", help="run a JSON campaign manifest")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.add_argument("--threads", type=_positive_int)
    c.set_defaults(func=cmd_campaign)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (InvalidParameter, MissingReference, json.JSONDecodeError, KeyError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
