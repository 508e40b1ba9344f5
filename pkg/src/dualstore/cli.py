"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 engine error,
3 read-expectation mismatch, 4 divergence found by ``fuzz``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .core import Scalar, format_value, ts_from_json
from .effects import apply_value
from .errors import StoreError
from .generator import GenParams, gen_history
from .harness import BACKENDS, differential_check, run_history
from .history import load_history, save_history
from .journal_store import Journal, is_journal_file
from .mutants import MUTANTS

EXIT_OK, EXIT_USAGE, EXIT_ENGINE, EXIT_MISMATCH, EXIT_DIVERGENCE = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def parse_probe(text: str):
    key, sep, ts = text.rpartition("@")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"probe must look like key@ts, got {text!r}")
    try:
        return key, Scalar(int(ts))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scalar timestamp in probe {text!r}") from None


def _probes(args) -> list:
    probes = list(args.probe or [])
    if getattr(args, "probes_file", None):
        with open(args.probes_file, encoding="utf-8") as fh:
            for item in json.load(fh):
                probes.append((item["key"], ts_from_json(item["ts"])))
    return probes


def _backends(args, allow_both: bool) -> list[str]:
    if args.backend == "both":
        if not allow_both:
            raise UsageError("--backend both is only valid for run and fuzz")
        return ["map", "journal"]
    return [args.backend]


def _print_probe(key, ts, state):
    try:
        text = format_value(apply_value(state))
    except StoreError as exc:
        text = f"error:{type(exc).__name__}"
    print(f"{key}@{ts.notation()} = {text}")


def cmd_run(args) -> int:
    history = load_history(args.history)
    probes = _probes(args)
    code = EXIT_OK
    for name in _backends(args, allow_both=True):
        result = run_history(history, name, args.nict)
        print(f"# backend: {name}")
        for i, txn, key, value in result.reads:
            print(f"read {txn} {key} = {format_value(value)}")
        for key, ts in probes:
            _print_probe(key, ts, result.store.lookup(key, ts))
        for i, err, msg in result.errors:
            print(f"{name}: step {i}: {err}: {msg}", file=sys.stderr)
        for i, txn, key, expected, actual in result.mismatches:
            print(f"{name}: step {i}: read {txn} {key} expected {format_value(expected)}, "
                  f"got {format_value(actual)}", file=sys.stderr)
        if result.errors:
            code = EXIT_ENGINE
        elif result.mismatches and code == EXIT_OK:
            code = EXIT_MISMATCH
    return code


def _load_store(path, backend: str, nict):
    """A journal file loads directly; anything else is replayed as a history."""
    if is_journal_file(path):
        if backend != "journal":
            raise UsageError("journal files can only be read with --backend journal")
        return Journal.load(path), []
    result = run_history(load_history(path), backend, nict)
    return result.store, result.errors


def _report_errors(backend, errors) -> int:
    for i, err, msg in errors:
        print(f"{backend}: step {i}: {err}: {msg}", file=sys.stderr)
    return EXIT_ENGINE if errors else EXIT_OK


def cmd_dump(args) -> int:
    (backend,) = _backends(args, allow_both=False)
    store, errors = _load_store(args.path, backend, args.nict)
    sys.stdout.write(store.dump())
    if args.save:
        if not isinstance(store, Journal):
            raise UsageError("--save needs --backend journal")
        store.save(args.save)
    return _report_errors(backend, errors)


def cmd_lookup(args) -> int:
    (backend,) = _backends(args, allow_both=False)
    probes = _probes(args)
    if not probes:
        raise UsageError("lookup needs at least one probe")
    store, errors = _load_store(args.path, backend, args.nict)
    for key, ts in probes:
        _print_probe(key, ts, store.lookup(key, ts))
    return _report_errors(backend, errors)


def _check_seed(job):
    seed, params, mutant, nict = job
    factory = MUTANTS[mutant] if mutant else BACKENDS["map"]
    report = differential_check(gen_history(seed, params), map_factory=factory,
                                nict=nict, shrink=False)
    return seed, report.ok


def cmd_fuzz(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    _backends(args, allow_both=True)
    env_seed = os.environ.get("DUALSTORE_SEED")
    start = int(env_seed) if env_seed else args.seed_start
    params = GenParams(txns=args.txns, keys=args.keys, max_effects=args.max_effects,
                       counter_bias=args.counter_bias)
    jobs = [(s, params, args.mutant, args.nict) for s in range(start, start + args.count)]
    if args.workers > 1:
        pool = ProcessPoolExecutor(args.workers)
        results = pool.map(_check_seed, jobs, chunksize=64)
    else:
        pool = None
        results = map(_check_seed, jobs)
    try:
        for done, (seed, ok) in enumerate(results, start=1):
            if not ok:
                return _divergence(seed, params, args)
            if done % 1000 == 0:
                print(f"checked {done}/{args.count} seeds")
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    print(f"ok: {args.count} seeds from {start}, no divergence")
    return EXIT_OK


def _divergence(seed, params, args) -> int:
    factory = MUTANTS[args.mutant] if args.mutant else BACKENDS["map"]
    report = differential_check(gen_history(seed, params), map_factory=factory, nict=args.nict)
    repro = args.repro or f"repro-{seed}.jsonl"
    save_history(report.shrunk, repro)
    print(f"seed {seed}: divergence")
    print(report.to_text())
    print(f"repro written to {repro}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    return EXIT_DIVERGENCE


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        flags = argparse.ArgumentParser(add_help=False)
        flags.add_argument("--backend", choices=["map", "journal", "both"],
                           default=default or "map")
        flags.add_argument("--nict", choices=["strong", "weaker1", "weaker2"],
                           default=default or "strong")
        return flags

    # subcommands suppress their defaults so flags given before the subcommand survive
    common = global_flags(argparse.SUPPRESS)

    probing = argparse.ArgumentParser(add_help=False)
    probing.add_argument("--probe", action="append", type=parse_probe, metavar="KEY@TS")
    probing.add_argument("--probes-file", metavar="JSON",
                         help='list of {"key": ..., "ts": {...}} objects')

    parser = _Parser(prog="dualstore", description=__doc__.splitlines()[0],
                     parents=[global_flags(None)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common, probing], help="replay a history file")
    run.add_argument("history")
    run.set_defaults(func=cmd_run)

    dump = sub.add_parser("dump", parents=[common], help="print backend contents")
    dump.add_argument("path", help="history (.jsonl) or journal file")
    dump.add_argument("--save", metavar="PATH", help="also write the journal to PATH")
    dump.set_defaults(func=cmd_dump)

    lookup = sub.add_parser("lookup", parents=[common, probing], help="query a store")
    lookup.add_argument("path", help="history (.jsonl) or journal file")
    lookup.set_defaults(func=cmd_lookup)

    fuzz = sub.add_parser("fuzz", parents=[common], help="differential fuzzing")
    fuzz.add_argument("--seed-start", type=int, default=0)
    fuzz.add_argument("--count", type=int, default=10_000)
    fuzz.add_argument("--txns", type=int, default=GenParams.txns)
    fuzz.add_argument("--keys", type=int, default=GenParams.keys)
    fuzz.add_argument("--max-effects", type=int, default=GenParams.max_effects)
    fuzz.add_argument("--counter-bias", type=float, default=GenParams.counter_bias)
    fuzz.add_argument("--mutant", choices=sorted(MUTANTS), help="plant a known bug in the map")
    fuzz.add_argument("--repro", metavar="PATH", help="where to write the shrunk history")
    fuzz.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    fuzz.add_argument("--workers", type=int, default=1)
    fuzz.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dualstore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dualstore: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, StoreError) as exc:
        # malformed history or journal input
        print(f"dualstore: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
