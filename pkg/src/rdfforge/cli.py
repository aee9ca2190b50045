"""Command line entry point.

Subcommands: `stats` (dataset statistics as JSON), `analyze` (schema report),
`generate` (SQLite database + optional SQL dump), `serve` (REST API over a
generated database).  Exit codes: 0 ok, 1 usage, 2 parse/validation, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .pipeline import run_pipeline
from .rdf_core import DEFAULT_BASE, RdfSyntaxError, parse_file
from .rest_api import create_app, schema_sidecar_path
from .sql_emit import create_database

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_IO = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_input_options(parser):
    parser.add_argument("input", help="RDF input file (.nt or .ttl)")
    parser.add_argument("--base", default=DEFAULT_BASE,
                        help="base namespace for skolem IRIs")
    parser.add_argument("--deterministic", action="store_true",
                        help="number skolem IRIs instead of using random UUIDs")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="rdfforge",
                             description="RDF datasets to relational databases with a REST API")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="print dataset statistics as JSON")
    _add_input_options(p_stats)

    p_analyze = sub.add_parser("analyze", help="write the generated schema description")
    _add_input_options(p_analyze)
    p_analyze.add_argument("--schema-out", required=True, help="schema JSON output path")

    p_generate = sub.add_parser("generate", help="convert the dataset into an SQLite database")
    _add_input_options(p_generate)
    p_generate.add_argument("--db", required=True, help="database file to create")
    p_generate.add_argument("--sql-dump", help="also write the SQL script here")
    p_generate.add_argument("--schema-out", help="extra copy of the schema description")
    p_generate.add_argument("--serve", action="store_true",
                            help="serve the REST API after generating")
    p_generate.add_argument("--host", default="127.0.0.1")
    p_generate.add_argument("--port", type=int, default=8000)
    p_generate.add_argument("--limit-default", type=int, default=1000)

    p_serve = sub.add_parser("serve", help="serve the REST API over a generated database")
    p_serve.add_argument("--db", required=True, help="generated database file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--limit-default", type=int, default=1000)

    return parser


def _pipeline_from_args(args):
    graph = parse_file(args.input)
    return run_pipeline(graph, base=args.base, deterministic=args.deterministic)


def cmd_stats(args) -> int:
    result = _pipeline_from_args(args)
    print(json.dumps(result.stats().to_json_dict()))
    return EXIT_OK


def cmd_analyze(args) -> int:
    result = _pipeline_from_args(args)
    _write_text(args.schema_out, json.dumps(result.schema.to_json_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_generate(args) -> int:
    result = _pipeline_from_args(args)
    db_path = Path(args.db)
    if db_path.exists():
        db_path.unlink()
    script = create_database(result.schema, result.records, result.ids, str(db_path))
    schema_json = json.dumps(result.schema.to_json_dict(), indent=2) + "\n"
    _write_text(schema_sidecar_path(str(db_path)), schema_json)
    if args.schema_out:
        _write_text(args.schema_out, schema_json)
    if args.sql_dump:
        _write_text(args.sql_dump, script.text)
    log.info("generated %s with %d tables", db_path, len(result.schema.tables))
    if args.serve:
        return _serve(str(db_path), args.host, args.port, args.limit_default)
    return EXIT_OK


def cmd_serve(args) -> int:
    return _serve(args.db, args.host, args.port, args.limit_default)


def _serve(db: str, host: str, port: int, limit_default: int) -> int:
    app = create_app(db, limit_default=limit_default)
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


_COMMANDS = {
    "stats": cmd_stats,
    "analyze": cmd_analyze,
    "generate": cmd_generate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except RdfSyntaxError as exc:
        print(f"rdfforge: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"rdfforge: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"rdfforge: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
