import argparse
import logging
import sys

from pydantic import ValidationError

from ffade import settings
from ffade.cli.commands import (
    cmd_aggregate,
    cmd_detect,
    cmd_dump_embeddings,
    cmd_evaluate,
    cmd_generate,
    cmd_sweep,
)
from ffade.config import PRESETS
from ffade.errors import ConfigError, FfadeError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for data errors here
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delimiter", default=",")
    p.add_argument("--header", action="store_true", help="Skip the first line of the input.")


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", default=None, help="key = value file with HyperParams field names.")
    g.add_argument("--preset", default=None, choices=sorted(PRESETS))
    g.add_argument("--t-setup", type=int, default=None, help="Default: first 10%% of the time span.")
    g.add_argument("--w-upd", type=int, default=None)
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--mem-limit", default=None, help="Skeleton capacity M; 'inf' for unbounded.")
    g.add_argument("--dim", type=int, default=None)
    g.add_argument("--f-th", type=float, default=None, help="Initial cut-off frequency.")
    g.add_argument("--undirected", action="store_true", default=None)
    g.add_argument(
        "--no-groups",
        dest="group_channels",
        action="store_false",
        default=None,
        help="Score the pair channel only.",
    )
    g.add_argument("--seed", type=int, default=None, help="Default: FFADE_SEED or 0.")
    g.add_argument("--epochs", type=int, default=None)
    g.add_argument("--setup-epochs", type=int, default=None)
    g.add_argument("--step-size", type=float, default=None)
    g.add_argument("--neg-per-node", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="python -m ffade.cli")
    p.add_argument("--log-level", default=None, help="Default: FFADE_LOG_LEVEL or INFO.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    detect = sub.add_parser("detect", help="Score an edge stream.")
    detect.add_argument("input")
    detect.add_argument("--labels", default=None, help="One 0/1 per input line; prints AUC to stderr.")
    detect.add_argument("--output", "-o", default=None)
    detect.add_argument("--checkpoint-out", default=None)
    detect.add_argument("--resume", default=None, help="Continue from a checkpoint instead of a fresh engine.")
    detect.add_argument("--skeleton-out", default=None)
    _add_format(detect)
    _add_params(detect)
    detect.set_defaults(func=cmd_detect)

    gen = sub.add_parser("generate", help="Write a synthetic labeled stream.")
    gen.add_argument("--output", "-o", required=True)
    gen.add_argument("--groups", type=int, default=2)
    gen.add_argument("--nodes-per-group", type=int, default=10)
    gen.add_argument("--base-freq", type=float, default=0.05)
    gen.add_argument("--horizon", type=int, default=5000)
    gen.add_argument("--injections", type=int, default=20)
    gen.add_argument("--kind", choices=["S", "W"], default="W")
    gen.add_argument("--clique-size", type=int, default=8)
    gen.add_argument("--burst-size", type=int, default=70)
    gen.add_argument("--pattern", choices=["i", "ii", "iii", "iv", "v"], default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--delimiter", default=",")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="AUC of a labeled stream over one or more seeds.")
    ev.add_argument("input")
    ev.add_argument("--labels", default=None, help="Default: the input's sibling .labels file.")
    ev.add_argument("--runs", type=int, default=1)
    _add_format(ev)
    _add_params(ev)
    ev.set_defaults(func=cmd_evaluate)

    sw = sub.add_parser("sweep", help="AUC and final cut-off over skeleton capacities.")
    sw.add_argument("input")
    sw.add_argument("--labels", default=None)
    sw.add_argument("--m-values", required=True, help="Comma list, e.g. 50,100,200,inf")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--output", "-o", default=None)
    _add_format(sw)
    _add_params(sw)
    sw.set_defaults(func=cmd_sweep)

    agg = sub.add_parser("aggregate", help="Max score per period from a detect output file.")
    agg.add_argument("input")
    agg.add_argument("--period", type=int, default=settings.WEEK_MINUTES)
    agg.add_argument("--output", "-o", default=None)
    agg.add_argument("--delimiter", default=",")
    agg.set_defaults(func=cmd_aggregate)

    dump = sub.add_parser("dump-embeddings", help="Write node_id,h_1..h_m lines.")
    dump.add_argument("input", nargs="?", default=None)
    dump.add_argument("--checkpoint", default=None)
    dump.add_argument("--output", "-o", default=None)
    _add_format(dump)
    _add_params(dump)
    dump.set_defaults(func=cmd_dump_embeddings)

    return p


def main(argv: list[str]) -> int:
    p = _build_parser()
    try:
        args = p.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE

    level = (args.log_level or settings.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(level), int):
        sys.stderr.write(f"error: unknown log level {level!r}\n")
        return EXIT_USAGE
    logging.basicConfig(level=level, format="%(levelname)s:%(name)s:%(message)s")

    try:
        return int(args.func(args))
    except (UsageError, ConfigError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except ValidationError as e:
        sys.stderr.write(f"error: invalid configuration: {e}\n")
        return EXIT_USAGE
    except (FfadeError, OSError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
