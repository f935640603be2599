"""The ``mini`` command line: serve, translate, bench, check, dump-theory."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import BenchConfig, report_to_json, run_benchmark
from .engine import Engine
from .interp import Completed, StepError
from .syntax.script import ParseError, parse_script
from .theoryfile import TheoryRegistry, builtin_registry, dump_theory


def _registry(theories: str | None) -> TheoryRegistry:
    if theories is None:
        return builtin_registry()
    reg = TheoryRegistry()
    reg.load_dir(theories)
    return reg


def _engine(args) -> Engine:
    engine = Engine(_registry(getattr(args, "theories", None)))
    db_path = getattr(args, "db", None)
    if db_path and Path(db_path).exists() and not getattr(args, "reset_db", False):
        engine.load_dbs(db_path)
    if getattr(args, "reset_db", False):
        engine.reset_dbs()
    return engine


def cmd_serve(args) -> int:
    from .replsrv import ReplServer

    host, _, port = args.bind.rpartition(":")
    server = ReplServer(
        (host or "127.0.0.1", int(port)),
        engine=_engine(args),
        admin_token=args.admin_token,
        statement_timeout=args.statement_timeout,
    )
    print(f"minilang repl listening on {server.address[0]}:{server.address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        if args.db:
            server.engine.save_dbs(args.db)
    return 0


def cmd_translate(args) -> int:
    from .translate import translate_corpus
    from .translate.corpus import report_to_json as translate_report_json

    engine = _engine(args)
    report = translate_corpus(args.in_dir, engine, args.out, args.theory)
    text = translate_report_json(report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    data = report.to_dict()
    ok = sum(1 for p in data["proofs"] if p["status"] == "ok")
    print(f"translated {ok}/{len(data['proofs'])} proofs -> {args.out}")
    if args.db:
        engine.save_dbs(args.db)
    return 0


def cmd_bench(args) -> int:
    engine = _engine(args)
    ks = tuple(int(k) for k in args.k.split(","))
    config = BenchConfig(ks=ks, reset_db=args.reset_db,
                         attempt_timeout=args.attempt_timeout, workers=args.workers)
    report = run_benchmark(args.corpus, args.attempts, config, engine)
    text = report_to_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for k in ks:
        print(f"pass@{k}: {report['pass_at'][str(k)]:.4f}")
    if args.db:
        engine.save_dbs(args.db)
    return 0


def cmd_check(args) -> int:
    engine = _engine(args)
    try:
        script = parse_script(Path(args.script).read_text(encoding="utf-8"))
    except ParseError as e:
        print(f"syntax error: {e}")
        return 1
    outcome, at = engine.check_script(script, args.theory)
    if isinstance(outcome, Completed):
        print(f"{args.script}: proof complete ({len(script.statements)} statements)")
        return 0
    if isinstance(outcome, StepError):
        print(f"{args.script}: failed at statement {at + 1}: {outcome.kind}: {outcome.detail}")
    else:
        print(f"{args.script}: open subgoals remain (premature termination)")
    return 1


def cmd_dump_theory(args) -> int:
    reg = _registry(args.theories)
    sys.stdout.write(dump_theory(reg.get(args.name), reg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mini", description="MiniLang proof engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the socket REPL service")
    p.add_argument("--bind", default="127.0.0.1:7464", help="host:port to listen on")
    p.add_argument("--theories", help="directory of .theory files (default: bundled)")
    p.add_argument("--db", help="premise database file to load/save")
    p.add_argument("--reset-db", action="store_true")
    p.add_argument("--admin-token", help="token authorizing reset_db requests")
    p.add_argument("--statement-timeout", type=float, default=10.0)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("translate", help="translate a directory of .isar proofs")
    p.add_argument("in_dir")
    p.add_argument("--theory", help="default theory for scripts without a pragma")
    p.add_argument("--out", required=True, help="output directory for .mini scripts")
    p.add_argument("--report", help="write the JSON pass report here")
    p.add_argument("--theories", help="directory of .theory files (default: bundled)")
    p.add_argument("--db", help="premise database file to load/save")
    p.add_argument("--reset-db", action="store_true")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("bench", help="run the pass@k benchmark harness")
    p.add_argument("--corpus", required=True, help="goals file (JSON lines)")
    p.add_argument("--attempts", required=True, help="directory of attempt samples")
    p.add_argument("--k", default="1,8", help="comma-separated k values")
    p.add_argument("--reset-db", action="store_true", help="reset the premise DB first")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--attempt-timeout", type=float, default=60.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--theories", help="directory of .theory files (default: bundled)")
    p.add_argument("--db", help="premise database file to load/save")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("check", help="check one .mini proof script")
    p.add_argument("script")
    p.add_argument("--theory", help="theory when the script has no pragma")
    p.add_argument("--theories", help="directory of .theory files (default: bundled)")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("dump-theory", help="print a theory in file format")
    p.add_argument("name")
    p.add_argument("--theories", help="directory of .theory files (default: bundled)")
    p.set_defaults(fn=cmd_dump_theory)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
