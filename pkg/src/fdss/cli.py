"""Command-line entry point: ``fdss <command> --spec FILE [--seed N] [--out DIR] [--threads N]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments
from .errors import FdssError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

log = logging.getLogger("fdss")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdss", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ccdf": "PAPR CCDF of each filter in the spec",
        "ser-sweep": "symbol error rate versus SNR",
        "train": "learn polynomial filters",
        "compare": "PAPR gain and SNR loss of candidates against a baseline",
        "resample-study": "reuse a learned filter at a wider extension and compare with retraining",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--spec", required=True, type=Path, help="experiment spec (JSON)")
        p.add_argument("--seed", type=_u64, default=None, help="override the spec's seed")
        p.add_argument("--out", type=Path, default=Path("runs") / name, help="output directory")
        p.add_argument("--threads", type=_positive, default=1, help="worker threads")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches our validation code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        spec = experiments.load_spec(args.spec)
        if args.seed is not None:
            spec.seed = args.seed
        summary = experiments.run(spec, args.out, args.threads, args.command, log=log.info)
    except ValidationError as exc:
        print(f"fdss: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FdssError as exc:
        print(f"fdss: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"fdss: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {args.out}")
    log.debug("%s", summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
