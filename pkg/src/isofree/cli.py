"""Command line: ``isofree enumerate | filter | graph``.

Exit codes: 0 success, 1 usage or input error, 2 search aborted by a
resource cap.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

from .cube import EncodingError
from .graph import build_graph, dump_graph
from .isofilter import FILTER_MODES, FilterStats, filter_models
from .modelio import (ModelFormatError, from_hex, read_compact, read_interpretations, to_hex,
                      format_interpretation)
from .search import CANON_MODES, STRATEGIES, SearchOptions, search
from .syntax import Theory, TheoryError, parse_theory

EXIT_OK, EXIT_USAGE, EXIT_ABORTED = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isofree",
                     description="Enumerate finite models up to isomorphism.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    en = sub.add_parser("enumerate", help="search for models of a theory")
    en.add_argument("-f", "--file", required=True, help="theory file")
    en.add_argument("-n", "--order", type=int, required=True, help="domain size (>= 2)")
    en.add_argument("--max-models", type=int, default=None)
    en.add_argument("--strategy", choices=STRATEGIES, default="row-major")
    en.add_argument("--no-lnh", action="store_true", help="disable the least number heuristic")
    en.add_argument("--no-propagation", action="store_true")
    en.add_argument("--canon", choices=CANON_MODES, default="graph",
                    help="graph keys, brute-force permutation keys, or no pruning")
    en.add_argument("--output", choices=("interp", "compact", "count"), default="interp")
    en.add_argument("--fingerprint", action="store_true",
                    help="store 128-bit key digests instead of full keys")
    en.add_argument("--store-cap", type=int, default=None, metavar="BYTES")
    en.add_argument("--max-nodes", type=int, default=None)

    fi = sub.add_parser("filter", help="drop models isomorphic to an earlier one")
    fi.add_argument("-f", "--file", required=True, help="theory file (for the signature)")
    fi.add_argument("-i", "--input", default="-", help="model file (default: stdin)")
    fi.add_argument("--format", choices=("compact", "interp"), default="compact")
    fi.add_argument("--mode", choices=FILTER_MODES, default="graph")

    gr = sub.add_parser("graph", help="print the colored graph of a model or cube")
    gr.add_argument("-f", "--file", required=True, help="theory file (for the signature)")
    gr.add_argument("hex", nargs="?", default=None, help="compact hex encoding (default: stdin)")
    return parser


def _load_theory(path: str) -> Theory:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_theory(fh.read())
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from None
    except TheoryError as exc:
        raise _UsageError(f"{path}: {exc}") from None


def cmd_enumerate(args, out: TextIO, err: TextIO) -> int:
    if args.order < 2:
        raise _UsageError("the domain size must be at least 2")
    theory = _load_theory(args.file)
    options = SearchOptions(strategy=args.strategy, lnh=not args.no_lnh,
                            propagation=not args.no_propagation, canon=args.canon,
                            max_models=args.max_models, fingerprint=args.fingerprint,
                            store_cap=args.store_cap, max_nodes=args.max_nodes)

    def sink(index: int, cube) -> None:
        if args.output == "interp":
            out.write(format_interpretation(cube, index + 1))
        elif args.output == "compact":
            out.write(to_hex(cube) + "\n")

    try:
        stats = search(theory, args.order, options, sink)
    except TheoryError as exc:
        raise _UsageError(f"{args.file}: {exc}") from None
    if args.output == "count":
        out.write(f"{stats.models}\n")
    err.write(stats.line() + "\n")
    if not stats.complete and stats.stop_reason != "max-models":
        return EXIT_ABORTED
    return EXIT_OK


def cmd_filter(args, out: TextIO, err: TextIO, stdin: TextIO) -> int:
    theory = _load_theory(args.file)
    try:
        fh = stdin if args.input == "-" else open(args.input, encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    with fh:
        if args.format == "compact":
            models = read_compact(fh, theory.signature)
        else:
            models = read_interpretations(fh.read(), theory.signature)
        stats = FilterStats()
        try:
            for number, (_, cube) in enumerate(filter_models(models, args.mode, stats), 1):
                if args.format == "compact":
                    out.write(to_hex(cube) + "\n")
                else:
                    out.write(format_interpretation(cube, number))
        except (ModelFormatError, ValueError) as exc:
            raise _UsageError(str(exc)) from None
    err.write(f"read={stats.read} kept={stats.kept} dropped={stats.dropped}\n")
    return EXIT_OK


def cmd_graph(args, out: TextIO, stdin: TextIO) -> int:
    theory = _load_theory(args.file)
    text = args.hex if args.hex is not None else stdin.read()
    try:
        cube = from_hex(text, theory.signature)
    except EncodingError as exc:
        raise _UsageError(f"bad model encoding: {exc}") from None
    out.write(dump_graph(build_graph(cube)))
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out: TextIO | None = None,
         err: TextIO | None = None, stdin: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    stdin = stdin or sys.stdin
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "enumerate":
            return cmd_enumerate(args, out, err)
        if args.command == "filter":
            return cmd_filter(args, out, err, stdin)
        return cmd_graph(args, out, stdin)
    except _UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
