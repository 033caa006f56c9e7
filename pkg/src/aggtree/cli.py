"""Command-line front end: ``aggtree bench|stress|audit|query|check``.

Exit status is 0 on success, 1 on usage or input errors and 2 when a
verification step (linearizability check or audit) fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import new_tree
from .aggregate import BUILTIN_SPECS
from .backbone import FAULTS, QueryFailure
from .basetree import NOT_FOUND
from .queries import QUERIES
from .verify.audit import audit_tree
from .verify.checker import check_linearizable
from .verify.history import History, decode_value, encode_value
from .verify.interleave import random_scenario, run_scenario
from .verify.scenarios import CORPUS
from .workload import OP_KINDS, WorkloadConfig, parse_mix, run_workload

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2

CSV_COLUMNS = ["variant", "threads", "opkind", "count", "ops_per_sec", "p50_us", "p99_us",
               "chain_steps_avg", "registry_scans_avg"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("AGGTREE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"AGGTREE_SEED must be an integer, got {env!r}") from None


def _config(args, **defaults) -> WorkloadConfig:
    try:
        mix = parse_mix(args.mix) if args.mix else defaults.get("mix", (50, 30, 10, 10))
    except ValueError as e:
        raise UsageError(str(e)) from None
    cfg = WorkloadConfig(
        variant=args.variant, threads=args.threads, keys=args.keys, ops=args.ops, mix=mix,
        query=args.query or "rank", agg=args.agg, seed=_seed(args.seed),
        prefill=args.prefill, path_record=not args.no_path_record,
        tid_lock=not args.no_tid_lock, backoff=args.backoff, fault=getattr(args, "fault", None),
    )
    try:
        cfg.validate()
    except ValueError as e:
        raise UsageError(str(e)) from None
    if cfg.query in ("rank", "select", "median_key_in_range") and BUILTIN_SPECS[cfg.agg].count is None:
        raise UsageError(f"query {cfg.query!r} needs an aggregate with a count, not {cfg.agg!r}")
    return cfg


def _percentile(xs: list[float], q: float) -> float:
    if not xs:
        return 0.0
    if len(xs) == 1:
        return xs[0]
    return statistics.quantiles(xs, n=100, method="inclusive")[int(q) - 1]


def bench_rows(cfg: WorkloadConfig, res) -> list[dict]:
    rows = []
    for kind in OP_KINDS:
        s = res.stats[kind]
        if not s.count:
            continue
        rows.append({
            "variant": cfg.variant,
            "threads": cfg.threads,
            "opkind": kind,
            "count": s.count,
            "ops_per_sec": f"{s.count / res.elapsed:.1f}" if res.elapsed > 0 else "0.0",
            "p50_us": f"{_percentile(s.latencies, 50) * 1e6:.2f}",
            "p99_us": f"{_percentile(s.latencies, 99) * 1e6:.2f}",
            "chain_steps_avg": f"{s.chain_steps / s.count:.4f}",
            "registry_scans_avg": f"{s.registry_scans / s.count:.4f}",
        })
    return rows


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_bench(args) -> int:
    cfg = _config(args)
    res = run_workload(cfg)
    if res.errors:
        print(f"worker failed: {res.errors[0]!r}", file=sys.stderr)
        return EXIT_VERIFY
    out, close = _open_out(args.out)
    try:
        w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(bench_rows(cfg, res))
    finally:
        if close:
            out.close()
    if args.no_audit:
        return EXIT_OK
    rep = audit_tree(res.tree)
    print(str(rep).splitlines()[0], file=sys.stderr)
    if not rep.ok:
        print(rep, file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = _config(args)
    res = run_workload(cfg)
    if res.errors:
        print(f"worker failed: {res.errors[0]!r}", file=sys.stderr)
        return EXIT_VERIFY
    rep = audit_tree(res.tree)
    print(rep)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def save_failure(path: str, meta: dict, history: History) -> None:
    with open(path, "w") as f:
        f.write(json.dumps({"meta": meta}) + "\n")
        f.write(history.to_jsonl())


def load_failure(path: str) -> tuple[dict, History]:
    with open(path) as f:
        first, _, rest = f.read().partition("\n")
    head = json.loads(first)
    if "meta" not in head:
        return {}, History.from_jsonl(first + "\n" + rest)
    return head["meta"], History.from_jsonl(rest)


def cmd_stress(args) -> int:
    cfg = _config(args)
    seed = cfg.seed
    out = args.out or f"aggtree-failure-{cfg.variant}-{seed}.jsonl"
    hist_threads = min(cfg.threads, 3)
    kw = dict(path_record=cfg.path_record, tid_lock=cfg.tid_lock, fault=cfg.fault)

    def failed(sc, res, verdict) -> int:
        meta = {"scenario": sc.name, "variant": cfg.variant, "spec": sc.spec,
                "initial": [[k, encode_value(v)] for k, v in res.initial],
                "schedule": [list(e) for e in sc.schedule], "seed": sc.seed,
                "verdict": verdict.status, "detail": verdict.detail}
        save_failure(out, meta, res.history)
        print(f"FAIL {sc.name}: {verdict.status} {verdict.detail}", file=sys.stderr)
        print(out)
        return EXIT_VERIFY

    if not args.no_corpus:
        for sc in CORPUS:
            res, verdict = run_scenario(sc, cfg.variant, **kw)
            if not verdict.ok:
                return failed(sc, res, verdict)
        print(f"corpus: {len(CORPUS)} scenarios linearizable", file=sys.stderr)
    queries = [args.query] if args.query else None
    for i in range(args.histories):
        sc = random_scenario(seed * 100_003 + i, spec=cfg.agg, threads=hist_threads,
                             ops=args.hist_ops, keys=args.hist_keys, queries=queries)
        res, verdict = run_scenario(sc, cfg.variant, **kw)
        if not verdict.ok:
            return failed(sc, res, verdict)
    print(f"random: {args.histories} histories linearizable", file=sys.stderr)
    if cfg.ops:
        res = run_workload(cfg)
        if res.errors:
            print(f"worker failed: {res.errors[0]!r}", file=sys.stderr)
            return EXIT_VERIFY
        rep = audit_tree(res.tree)
        print(str(rep).splitlines()[0], file=sys.stderr)
        if not rep.ok:
            with open(out, "w") as f:
                f.write(str(rep) + "\n")
            print(rep, file=sys.stderr)
            print(out)
            return EXIT_VERIFY
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        meta, hist = load_failure(args.file)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot read history {args.file}: {e}") from None
    spec = meta.get("spec", args.agg)
    initial = [(k, decode_value(v)) for k, v in meta.get("initial", [])]
    verdict = check_linearizable(hist, spec, initial)
    print(verdict)
    return EXIT_OK if verdict.ok else EXIT_VERIFY


# -- op scripts -------------------------------------------------------------------

def _parse_value(tok: str) -> Any:
    for conv in (int, Fraction):
        try:
            return conv(tok)
        except (ValueError, ZeroDivisionError):
            pass
    return tok


def _parse_int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise UsageError(f"line {lineno}: {what} must be an integer, got {tok!r}") from None


def parse_script(text: str) -> list[tuple[int, tuple]]:
    """Parse ``ins K V | del K | get K | q NAME ARGS`` lines into ops."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        cmd = tok[0]
        if cmd == "ins":
            if len(tok) not in (2, 3):
                raise UsageError(f"line {lineno}: expected 'ins K V', got {line!r}")
            key = _parse_int(tok[1], lineno, "key")
            ops.append((lineno, ("insert", key, _parse_value(tok[2]) if len(tok) == 3 else None)))
        elif cmd in ("del", "get"):
            if len(tok) != 2:
                raise UsageError(f"line {lineno}: expected '{cmd} K', got {line!r}")
            ops.append((lineno, ("delete" if cmd == "del" else "contains", _parse_int(tok[1], lineno, "key"))))
        elif cmd == "q":
            if len(tok) < 2 or tok[1] not in QUERIES:
                raise UsageError(f"line {lineno}: expected 'q NAME ARGS' with NAME in {', '.join(QUERIES)}")
            ops.append((lineno, ("query", tok[1], *(_parse_int(t, lineno, "query argument") for t in tok[2:]))))
        else:
            raise UsageError(f"line {lineno}: unknown command {cmd!r} (use ins, del, get or q)")
    return ops


def format_answer(v: Any) -> str:
    if v is NOT_FOUND:
        return "NOT_FOUND"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def _run_query(tree, name: str, args: Sequence[int]) -> str:
    try:
        return format_answer(tree.query(name, *args))
    except QueryFailure as e:
        raise UsageError(f"query failed ({e.kind}): {e}") from None
    except TypeError:
        raise UsageError(f"wrong number of arguments for query {name!r}") from None


def cmd_query(args) -> int:
    if args.inline is not None:
        text = args.inline.replace(";", "\n")
    elif args.script == "-":
        text = sys.stdin.read()
    elif args.script:
        try:
            with open(args.script) as f:
                text = f.read()
        except OSError as e:
            raise UsageError(f"cannot read script: {e}") from None
    else:
        raise UsageError("give an op script path, '-' for stdin, or -e TEXT")
    ops = parse_script(text)
    if not args.query:
        raise UsageError("missing query, e.g. 'rank 9'")
    name, *qargs = args.query
    if name not in QUERIES:
        raise UsageError(f"unknown query {name!r}; choose from {', '.join(QUERIES)}")
    qint = [_parse_int(a, 0, "query argument") for a in qargs]
    tree = new_tree(args.agg, 1, args.variant)
    for lineno, op in ops:
        kind = op[0]
        if kind == "insert":
            tree.insert(op[1], op[2])
        elif kind == "delete":
            tree.delete(op[1])
        elif kind == "contains":
            print(format_answer(tree.contains(op[1])))
        else:
            try:
                print(_run_query(tree, op[1], op[2:]))
            except UsageError as e:
                raise UsageError(f"line {lineno}: {e}") from None
    print(_run_query(tree, name, qint))
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _workload_args(p: argparse.ArgumentParser, *, threads: int, ops: int, keys: int) -> None:
    p.add_argument("--variant", choices=["fastupdate", "fastquery"], default="fastupdate")
    p.add_argument("--threads", type=int, default=threads)
    p.add_argument("--keys", type=int, default=keys, help="key range size")
    p.add_argument("--ops", type=int, default=ops, help="total operations over all threads")
    p.add_argument("--mix", help="insert:delete:contains:query percentages (default 50:30:10:10)")
    p.add_argument("--query", choices=sorted(QUERIES), help="query kind (default rank)")
    p.add_argument("--agg", choices=sorted(BUILTIN_SPECS), default="count")
    p.add_argument("--seed", type=int, help="defaults to $AGGTREE_SEED, else 0")
    p.add_argument("--prefill", type=float, default=0.5, help="fraction of the key range inserted first")
    p.add_argument("--no-path-record", action="store_true")
    p.add_argument("--no-tid-lock", action="store_true")
    p.add_argument("--backoff", action="store_true", help="exponential backoff on restarts")
    p.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="aggtree", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("bench", help="run a workload and emit CSV")
    _workload_args(p, threads=4, ops=10_000, keys=1000)
    p.add_argument("--no-audit", action="store_true", help="skip the final audit")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("stress", help="check random histories, then audit a threaded run")
    _workload_args(p, threads=3, ops=20_000, keys=1000)
    p.add_argument("--histories", type=int, default=200)
    p.add_argument("--hist-ops", type=int, default=6, help="operations per random history")
    p.add_argument("--hist-keys", type=int, default=5, help="key range of random histories")
    p.add_argument("--no-corpus", action="store_true", help="skip the fixed scenario corpus")
    p.add_argument("--fault", choices=FAULTS, help="inject a known bug")
    p.set_defaults(fn=cmd_stress)

    p = sub.add_parser("audit", help="run a workload and audit the final tree")
    _workload_args(p, threads=4, ops=10_000, keys=1000)
    p.add_argument("--fault", choices=FAULTS, help="inject a known bug")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("query", help="build a tree from an op script and run one query")
    p.add_argument("script", nargs="?", help="op script path, or '-' for stdin")
    p.add_argument("query", nargs="*", help="query name and integer arguments")
    p.add_argument("-e", "--inline", help="op script text; ';' separates lines")
    p.add_argument("--variant", choices=["fastupdate", "fastquery"], default="fastupdate")
    p.add_argument("--agg", choices=sorted(BUILTIN_SPECS), default="count")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("check", help="re-check a saved history")
    p.add_argument("file")
    p.add_argument("--agg", choices=sorted(BUILTIN_SPECS), default="count")
    p.set_defaults(fn=cmd_check)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if extra:
        if args.cmd != "query" or any(e.startswith("-") and not e.lstrip("-").isdigit() for e in extra):
            ap.error(f"unrecognized arguments: {' '.join(extra)}")
        args.query = list(args.query) + extra
    if args.cmd == "query" and args.inline is not None and args.script is not None:
        # with -e the first positional is part of the query
        args.query = [args.script] + list(args.query)
        args.script = None
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"aggtree: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
