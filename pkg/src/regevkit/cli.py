"""Command-line entry point: ``regevkit <command> [options]``.

Exit status: 0 success, 1 a verification found violations, 2 invalid
arguments or input, 3 retryable failure after all retries, 4 resource budget
exceeded. Reports go to ``--output-dir`` (default: ``$REGEVKIT_OUTPUT_DIR``);
the summary is always printed to stdout as JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import experiments as ex
from .errors import InputError, ResourceError
from .group import DEFAULT_FACTOR_BUDGET
from .pipelines import Status, derive_params, dlog, factor, find_order, is_rsa_safe_modulus

OUTPUT_ENV = "REGEVKIT_OUTPUT_DIR"
DEFAULT_SCALED_X = 10**4

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_RETRY, EXIT_RESOURCE = 0, 1, 2, 3, 4


def _int(text: str) -> int:
    """Integers, also written as ``10**4`` or ``1e4``."""
    text = text.strip()
    try:
        if "**" in text:
            base, exp = text.split("**", 1)
            return int(base) ** int(exp)
        if "e" in text.lower():
            mant, exp = text.lower().split("e", 1)
            return int(mant) * 10 ** int(exp)
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [_int(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, seed_required: bool = True) -> None:
    p.add_argument("--seed", type=_int, required=seed_required, help="root seed (64-bit)")
    p.add_argument("--output-dir", default=os.environ.get(OUTPUT_ENV), help=f"report directory (env {OUTPUT_ENV})")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="trial row format")


def _x_options(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--X", type=_int, default=DEFAULT_SCALED_X, help="prime bound (default 10**4)")
    g.add_argument("--asymptotic-x", action="store_true", help="use X = d^(1000 d)")
    p.add_argument("--d", type=int, default=None, help="override the dimension d")
    p.add_argument("--k-draws", type=int, default=None, help="random integers drawn per attempt (default d^4)")
    p.add_argument("--retries", type=int, default=8)
    p.add_argument("--factor-budget", type=_int, default=DEFAULT_FACTOR_BUDGET)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regevkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor", help="find a nontrivial divisor of N")
    p.add_argument("--modulus", type=_int, required=True)
    _x_options(p)
    _common(p)

    p = sub.add_parser("dlog", help="discrete logarithm of target to base")
    p.add_argument("--modulus", type=_int, required=True)
    p.add_argument("--base", type=_int, required=True)
    p.add_argument("--target", type=_int, required=True)
    _x_options(p)
    _common(p)

    p = sub.add_parser("order", help="multiplicative order of an element")
    p.add_argument("--modulus", type=_int, required=True)
    p.add_argument("--element", type=_int, required=True)
    _x_options(p)
    _common(p)

    p = sub.add_parser("short-basis", help="relation-lattice short-basis experiment")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--X", type=_int, default=None, help="prime bound (default: d^(1000 d))")
    p.add_argument("--high-band-every", type=int, default=4, help="every k-th trial takes N in (8103, 10^6]")
    p.add_argument("--prime-cache", default=None, help="JSON cache of sampled prime tuples")
    p.add_argument("--enum-budget", type=_int, default=200_000)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _common(p)

    p = sub.add_parser("verify-identities", help="exact character-sum identity suite")
    p.add_argument("--max-modulus", type=_int, default=105)
    _common(p)

    p = sub.add_parser("char-diagnostics", help="E_j histogram, prime averages, second moment")
    p.add_argument("--modulus", type=_int, required=True)
    p.add_argument("--X", type=_int, default=10**4)
    p.add_argument("--H", type=int, default=4)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--moment-X", type=_int, default=None)
    p.add_argument("--subgroup-power", type=_int, default=None, help="restrict to M-th powers of characters")
    _common(p)

    p = sub.add_parser("cube-lemma", help="hyperplane/unit-cube intersection counts")
    p.add_argument("--normals", type=int, default=10_000)
    p.add_argument("--dims", type=_int_list, default=[2, 3, 4])
    p.add_argument("--sides", type=_int_list, default=[1, 2, 4, 8])
    _common(p)

    p = sub.add_parser("bench-mulexp", help="product-tree cost model and agreement check")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--ds", type=_int_list, default=[16, 32, 64, 128, 256])
    p.add_argument("--ms", type=_int_list, default=[512, 1024, 2048, 4096])
    _common(p)

    p = sub.add_parser("toy-rsa", help="short products modulo a safe RSA modulus")
    p.add_argument("--modulus", type=_int, default=1081)
    p.add_argument("--X", type=_int, default=50)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--H", type=int, default=46)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _common(p)
    return parser


def _params(args, N: int):
    X = None if args.asymptotic_x else args.X
    return derive_params(N, X=X, d=args.d, k_draws=args.k_draws)


def _single(args, outcome, extra: dict) -> int:
    from .experiments import ExperimentConfig, ExperimentReport, _jsonable

    row = {"status": outcome.status.value, "witness": outcome.witness, **extra}
    summary = {**row, "diagnostics": _jsonable(outcome.diagnostics)}
    params = {k: v for k, v in vars(args).items() if k not in ("output_dir", "format", "seed", "command")}
    cfg = ExperimentConfig(args.command, args.seed, 1, _jsonable(params), 1, args.format)
    _emit(args, ExperimentReport(cfg, [_jsonable(row)], summary, []))
    return {Status.SUCCESS: EXIT_OK, Status.RETRYABLE: EXIT_RETRY, Status.INVALID: EXIT_INPUT}[outcome.status]


def _emit(args, report) -> None:
    if args.output_dir:
        report.write(args.output_dir)
    print(json.dumps(report.summary, indent=2, sort_keys=True, default=str))


def _run(args) -> int:
    from .sampler import SeededStream

    cmd = args.command
    if cmd in ("factor", "dlog", "order"):
        N = args.modulus
        if N < 3:
            raise InputError("modulus must be >= 3")
        stream = SeededStream(args.seed)
        params = _params(args, N)
        kw = dict(params=params, stream=stream, retries=args.retries, budget=args.factor_budget)
        if cmd == "factor":
            out = factor(N, **kw)
        elif cmd == "dlog":
            out = dlog(N, args.base, args.target, **kw)
        else:
            out = find_order(N, args.element, **kw)
        return _single(args, out, {"N": N, "params": params.describe()})

    if cmd == "short-basis":
        rep = ex.short_basis_experiment(
            args.trials, args.seed, args.prime_cache, args.high_band_every, args.X, args.enum_budget, args.workers, args.format
        )
        _emit(args, rep)
        return EXIT_VIOLATION if rep.summary["invariant_violations"] else EXIT_OK
    if cmd == "verify-identities":
        rep = ex.verify_identities(args.seed, args.max_modulus, args.format)
        _emit(args, rep)
        return EXIT_VIOLATION if rep.summary["total_violations"] else EXIT_OK
    if cmd == "char-diagnostics":
        rep = ex.char_diagnostics(
            args.modulus, args.X, args.H, args.seed, args.trials, args.moment_X, args.subgroup_power, args.format
        )
        _emit(args, rep)
        return EXIT_OK
    if cmd == "cube-lemma":
        rep = ex.cube_lemma_experiment(args.seed, tuple(args.dims), tuple(args.sides), args.normals, args.format)
        _emit(args, rep)
        return EXIT_VIOLATION if rep.summary["total_violations"] else EXIT_OK
    if cmd == "bench-mulexp":
        rep = ex.bench_mulexp(args.seed, tuple(args.ds), tuple(args.ms), args.instances, output_format=args.format)
        _emit(args, rep)
        return EXIT_VIOLATION if rep.summary["mismatches"] else EXIT_OK
    if cmd == "toy-rsa":
        if not is_rsa_safe_modulus(args.modulus):
            raise InputError(f"{args.modulus} is not a product of two safe primes")
        rep = ex.toy_rsa_experiment(args.trials, args.seed, args.modulus, args.X, args.d, args.H, args.workers, args.format)
        _emit(args, rep)
        return EXIT_VIOLATION if rep.summary["unverified_witnesses"] else EXIT_OK
    raise InputError(f"unknown command {cmd}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = _run(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    print(f"elapsed {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
