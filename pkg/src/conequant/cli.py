"""``conequant`` command-line tool.

Exit codes: 0 all checks passed, 1 a check failed (the report is still
written), 2 invalid usage.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .reports import (
    SPECTRUM_TOL,
    ConfigError,
    classical_report,
    parse_state,
    pde_report,
    render,
    spectrum_report,
    symmetry_report,
    thread_cap,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_MODELS = {"free": "free", "ho": "harmonic", "harmonic": "harmonic"}


def _k(text: str) -> float:
    try:
        k = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < k <= 1:
        raise argparse.ArgumentTypeError(f"k must lie in (0, 1], got {text}")
    return k


def _positive(kind):
    def parse(text: str):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not x > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return x

    return parse


def _nonnegative_int(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--k", type=_k, default=0.6, help="cone parameter sin(alpha), 0 < k <= 1")

    parser = argparse.ArgumentParser(prog="conequant", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("symmetries", parents=[common], help="certify the point symmetries of the classical model")
    p.add_argument("--model", choices=sorted(_MODELS), default="free")
    p.add_argument("--omega", type=_positive(float))
    p.add_argument("--samples", type=_positive(int), default=200)
    p.add_argument("--seed", type=_nonnegative_int, default=0)

    p = sub.add_parser("spectrum", parents=[common], help="bound-state energies of the oscillator equations")
    p.add_argument("--variant", choices=("noether", "kowalski"), default="noether")
    p.add_argument("--omega", type=_positive(float), default=1.0)
    p.add_argument("--pmax", type=_nonnegative_int, default=2)
    p.add_argument("--nmax", type=_nonnegative_int, default=5)
    p.add_argument("--tol", type=_positive(float), default=SPECTRUM_TOL)
    p.add_argument("--rmax", type=_positive(float), help="outer radius (default: automatic)")
    p.add_argument("--N", type=_positive(int), default=2000, help="grid cells on the coarse level")

    p = sub.add_parser("classical", parents=[common], help="integrate a trajectory and track the first integrals")
    p.add_argument("--model", choices=sorted(_MODELS), default="free")
    p.add_argument("--omega", type=_positive(float))
    p.add_argument("--ic", required=True, help="t0,r0,phi0,rdot0,phidot0")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--rtol", type=_positive(float), default=1e-10)
    p.add_argument("--atol", type=_positive(float), default=1e-10)
    p.add_argument("--n-out", type=_positive(int), help="report on a uniform grid of this many times")

    p = sub.add_parser("check-pde", parents=[common], help="action of the symmetries on a Schrodinger equation")
    p.add_argument("--variant", required=True,
                   choices=("noether_free", "noether_ho", "kowalski_free", "kowalski_ho"))
    p.add_argument("--omega", type=_positive(float))
    p.add_argument("--samples", type=_positive(int), default=50)
    p.add_argument("--seed", type=_nonnegative_int, default=0)
    return parser


def run(args: argparse.Namespace):
    threads = thread_cap()
    if args.command == "symmetries":
        return symmetry_report(_MODELS[args.model], args.k, args.omega, args.samples, args.seed, threads=threads)
    if args.command == "spectrum":
        return spectrum_report(args.variant, args.k, args.omega, args.pmax, args.nmax, args.tol,
                               r_max=args.rmax, N=args.N, threads=threads)
    if args.command == "classical":
        return classical_report(_MODELS[args.model], args.k, args.omega, parse_state(args.ic), args.t_end,
                                rtol=args.rtol, atol=args.atol, n_out=args.n_out)
    return pde_report(args.variant, args.k, args.omega, args.samples, args.seed)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad usage
    try:
        report = run(args)
        text = render(report, args.format)
    except ConfigError as exc:
        parser.error(str(exc))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
