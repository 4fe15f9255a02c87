"""
Command-line front end: ``qam-index {eval,search,simulate,codec,capacity}``.

Tables, JSON and CSV go to stdout; logs go to stderr. Exit codes are 0 on
success, 2 for an invalid code, 3 when a budget is exceeded and 4 for bad
arguments. Negative leading values need the ``--row=-2,1`` spelling.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

import numpy as np

from app.core.config import get_settings
from app.core.errors import EXIT_BAD_ARGS, EXIT_OK, IndexCodeError, InvalidConfigError
from app.schemas import (
    CodeRecord,
    GainReportRecord,
    SearchResultRecord,
    SimResultRecord,
    load_code_json,
)
from app.services.awgnsim import ChannelConfig, SnrConvention, capacity_min_snr_db, simulate, write_csv
from app.services.gain import gamma, render_table
from app.services.indexcode import (
    IndexCode,
    SideInfoSet,
    constellation_labels,
    decode_no_side_info,
    decode_with_side_info,
    encode,
    format_subset,
    new_circulant,
    new_code,
    parse_subset,
)
from app.services.search import FirstEntryPolicy, SearchSpec, TiePolicy, search_circulant

logger = logging.getLogger(__name__)


class CliArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the bad-arguments code instead of argparse's 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_ARGS, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(" ", "").strip("()").split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.replace(" ", "").strip("()").split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _matrix(text: str) -> list[list[int]]:
    return [_ints(row) for row in text.split(";")]


def _snr_points(text: str) -> list[float]:
    """Either "a,b,c" or an inclusive range "start:stop:step"."""
    if ":" not in text:
        return _floats(text)
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from exc
    if step <= 0:
        raise argparse.ArgumentTypeError("SNR step must be positive")
    return [round(float(v), 6) for v in np.arange(start, stop + step / 2, step)]


def _format_vector(values: Sequence[int]) -> str:
    return "(" + ",".join(str(v) for v in values) + ")"


def _code_from_args(args: argparse.Namespace) -> IndexCode:
    if args.json_in:
        return load_code_json(Path(args.json_in).read_text())
    if args.M is None or (args.row is None and args.matrix is None):
        raise InvalidConfigError("give -M with --row or --matrix, or --json-in FILE")
    if args.row is not None:
        K = args.K if args.K is not None else len(args.row)
        return new_circulant(args.M, K, args.row)
    if args.K is not None and len(args.matrix) != args.K:
        raise InvalidConfigError(f"matrix has {len(args.matrix)} rows, expected K={args.K}")
    return new_code(args.M, args.matrix)


def _print_json(record: object) -> None:
    if hasattr(record, "model_dump_json"):
        print(record.model_dump_json(indent=2))
    else:
        print(json.dumps(record, indent=2))


def cmd_eval(args: argparse.Namespace) -> int:
    code = _code_from_args(args)
    report = gamma(code, verify=args.verify, brute_force=args.brute_force)
    if args.json:
        _print_json(GainReportRecord.from_report(report))
    else:
        print(render_table(report))
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    spec = SearchSpec(
        M=args.M,
        K=args.K,
        first_entry_policy=(
            FirstEntryPolicy.ALL if args.all_first_entries else FirstEntryPolicy.ORBIT_REPRESENTATIVES
        ),
        tie_policy=TiePolicy.ALL if args.all_ties else TiePolicy.FIRST,
        budget=args.budget,
        threads=args.threads or get_settings().threads,
        prune=not args.no_prune,
        full_matrix=args.full_matrix,
    )
    checkpoint = args.resume or args.checkpoint
    if args.resume and not Path(args.resume).exists():
        raise InvalidConfigError(f"no checkpoint at {args.resume}")
    result = search_circulant(spec, checkpoint=checkpoint)
    if args.json:
        _print_json(SearchResultRecord.from_result(result))
        return EXIT_OK

    status = "complete" if result.complete else f"partial ({result.next_index}/{result.total_candidates})"
    print(
        f"examined {result.candidates_examined} candidates, {result.candidates_valid} valid, "
        f"{result.elapsed_seconds:.1f}s, {status}"
    )
    print(f"{'M':>4} {'K':>3}  {'first row':<24}{'Γ':>8}")
    gamma_text = f"{result.best_gamma_db:>8.2f}" if result.best_gamma_db is not None else f"{'-':>8}"
    for row in result.best_codes or [()]:
        print(f"{spec.M:>4} {spec.K:>3}  {_format_vector(row):<24}{gamma_text}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    code = _code_from_args(args)
    cfg = ChannelConfig(
        snr_db_points=tuple(args.snr),
        trials_per_point=args.trials,
        seed=args.seed,
        snr_convention=SnrConvention(args.convention),
        max_errors=args.max_errors,
        threads=args.threads or get_settings().threads,
    )
    subsets = [parse_subset(text, code.K) for text in (args.subset or [""])]
    results = [simulate(code, S, cfg) for S in subsets]
    if args.json:
        _print_json(SimResultRecord.from_results(results))
        return EXIT_OK
    if args.csv:
        write_csv(results, args.csv)
        logger.info(f"Wrote {sum(len(r.points) for r in results)} points to {args.csv}")
    else:
        print(f"# rng={results[0].rng} seed={cfg.seed} convention={cfg.snr_convention.value}")
        write_csv(results, sys.stdout)
    return EXIT_OK


def cmd_codec(args: argparse.Namespace) -> int:
    code = _code_from_args(args)
    if args.codec_command == "encode":
        x = encode(code, args.message)
        if args.json:
            _print_json({"code": CodeRecord.from_code(code).model_dump(), "message": args.message, "codeword": list(x)})
        else:
            print(_format_vector(list(x)))
    elif args.codec_command == "decode":
        S = parse_subset(args.subset, code.K)
        if S:
            values = tuple(args.side_values or ())
            w = decode_with_side_info(code, args.received, SideInfoSet(S=S, values=values))
        else:
            w = decode_no_side_info(code, args.received)
        if args.json:
            _print_json({"code": CodeRecord.from_code(code).model_dump(), "subset": sorted(S), "message": list(w)})
        else:
            print(_format_vector(list(w)))
    else:
        labels = constellation_labels(code)
        if args.json:
            _print_json(
                {
                    "code": CodeRecord.from_code(code).model_dump(),
                    "labels": [{"point": list(x), "message": list(w)} for x, w in labels],
                }
            )
        else:
            for x, w in labels:
                print(f"{_format_vector(list(x)):<20} {_format_vector(list(w))}")
    return EXIT_OK


def cmd_capacity(args: argparse.Namespace) -> int:
    if args.K is not None and args.K != len(args.rates):
        raise InvalidConfigError(f"{len(args.rates)} rates given for K={args.K}")
    S = parse_subset(args.subset, len(args.rates), proper=False)
    snr_db = capacity_min_snr_db(args.rates, S)
    finite = math.isfinite(snr_db)
    if args.json:
        _print_json({"rates": args.rates, "subset": sorted(S), "min_snr_db": snr_db if finite else None})
    elif finite:
        print(f"S={format_subset(S)}: {snr_db:.2f} dB")
    else:
        print(f"S={format_subset(S)}: no minimum SNR")
    return EXIT_OK


def _code_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-M", type=int, help="modulus (constellation points per dimension)")
    parent.add_argument("-K", type=int, help="number of messages")
    parent.add_argument("--row", type=_ints, help="first row of a circulant code, e.g. 1,-2")
    parent.add_argument("--matrix", type=_matrix, help="full matrix, rows separated by ';'")
    parent.add_argument("--json-in", metavar="FILE", help="read the code from a JSON record")
    parent.add_argument("--json", action="store_true", help="emit JSON")
    return parent


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="qam-index", description="Z_M-linear QAM index codes.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)
    code_parent = _code_parent()

    p_eval = commands.add_parser("eval", parents=[code_parent], help="side information gain of a code")
    p_eval.add_argument("--verify", action="store_true", help="evaluate every subset, not one per shift class")
    p_eval.add_argument("--brute-force", action="store_true", help="use the exhaustive distance oracle")
    p_eval.set_defaults(handler=cmd_eval)

    p_search = commands.add_parser("search", help="best circulant code for (M, K)")
    p_search.add_argument("-M", type=int, required=True)
    p_search.add_argument("-K", type=int, required=True)
    p_search.add_argument("--all-ties", action="store_true", help="report every best first row")
    p_search.add_argument("--all-first-entries", action="store_true", help="do not normalise v_1")
    p_search.add_argument("--threads", type=int, help="worker processes (default: THREADS)")
    p_search.add_argument("--budget", type=int, help="candidates per run")
    p_search.add_argument("--checkpoint", metavar="FILE", help="save progress to FILE")
    p_search.add_argument("--resume", metavar="FILE", help="continue from an existing checkpoint")
    p_search.add_argument("--no-prune", action="store_true")
    p_search.add_argument("--full-matrix", action="store_true", help="search all matrices (tiny sizes)")
    p_search.add_argument("--json", action="store_true")
    p_search.set_defaults(handler=cmd_search)

    p_sim = commands.add_parser("simulate", parents=[code_parent], help="Monte-Carlo error rates")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--snr", type=_snr_points, required=True, help="a,b,c or start:stop:step (dB)")
    p_sim.add_argument("--trials", type=int, default=100_000, help="trials per SNR point")
    p_sim.add_argument("--subset", action="append", help="side information, e.g. 1 or 1,3 (repeatable)")
    p_sim.add_argument(
        "--convention",
        choices=[c.value for c in SnrConvention],
        default=SnrConvention.NOISE_VARIANCE_PER_DIM.value,
    )
    p_sim.add_argument("--max-errors", type=int, help="stop a point after this many errors (0: never)")
    p_sim.add_argument("--threads", type=int)
    p_sim.add_argument("--csv", metavar="FILE", help="write the CSV here instead of stdout")
    p_sim.set_defaults(handler=cmd_simulate)

    p_codec = commands.add_parser("codec", help="encode, decode or list labels")
    codec_commands = p_codec.add_subparsers(dest="codec_command", required=True, parser_class=CliArgumentParser)
    p_encode = codec_commands.add_parser("encode", parents=[code_parent])
    p_encode.add_argument("--message", type=_ints, required=True)
    p_decode = codec_commands.add_parser("decode", parents=[code_parent])
    p_decode.add_argument("--received", type=_floats, required=True)
    p_decode.add_argument("--subset", default="", help="known message indices")
    p_decode.add_argument("--side-values", type=_ints, help="values of the known messages")
    codec_commands.add_parser("labels", parents=[code_parent])
    p_codec.set_defaults(handler=cmd_codec)

    p_cap = commands.add_parser("capacity", help="minimum SNR from the capacity limit")
    p_cap.add_argument("-K", type=int)
    p_cap.add_argument("--rates", type=_floats, required=True, help="R_1,...,R_K in b/dim")
    p_cap.add_argument("--subset", default="")
    p_cap.add_argument("--json", action="store_true")
    p_cap.set_defaults(handler=cmd_capacity)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.DEBUG if verbosity > 1 else logging.INFO if verbosity else get_settings().log_level
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return int(args.handler(args))
    except IndexCodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS


if __name__ == "__main__":
    sys.exit(main())
