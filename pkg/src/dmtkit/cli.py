"""Command-line entry point: ``dmtkit sweep | reproduce | thresholds``.

Exit codes: 0 success, 1 usage or configuration error, 2 when every grid
point of a sweep fell outside the rate definition's domain.
"""

import argparse
import json
import sys

from .config import SECTIONS, ConfigError, load_config, output_dir
from .errors import DmtError, DomainError
from .experiments import REPRODUCE_TARGETS, format_threshold_table, reproduce, run_sweep, threshold_rows, write_sweep
from .outage import MuxGainDef

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_FLAG_HELP = {
    "kind": "channel ensemble: iid or keyhole",
    "m": "transmit antennas",
    "n": "receive antennas",
    "family": "i.i.d. entry distribution: complex-gaussian or on-off-uniform-phase",
    "rho_t": "keyhole Tx exponential correlation coefficient",
    "rho_r": "keyhole Rx exponential correlation coefficient",
    "start_db": "first SNR of the sweep (dB)",
    "stop_db": "last SNR of the sweep (dB, inclusive)",
    "step_db": "sweep step (dB)",
    "definition": "multiplexing gain: log_snr, log_snr_offset or mean_fraction",
    "r": "multiplexing gain",
    "outputs": "comma list from analytic, bound, dprime_numeric, dprime_closed, mc, thresholds",
    "trials": "Monte-Carlo trials per SNR",
    "seed": "Monte-Carlo seed",
    "workers": "worker threads (never changes results)",
    "shard_size": "trials per deterministic shard",
    "mc_mode": "crn (shared realizations across SNRs) or independent",
    "path": "output path, '-' for stdout",
    "format": "csv, json or both",
}


def _build_parser():
    parser = _Parser(prog="dmtkit", description="Finite-SNR DMT curves, outage and thresholds for MIMO channels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sweep = sub.add_parser("sweep", help="evaluate curves on an SNR grid")
    sweep.add_argument("--config", "-c", help="INI scenario file; flags override its values")
    for key in SECTIONS:
        flag = "--" + key.replace("_", "-")
        names = [flag, "-o"] if key == "path" else [flag]
        sweep.add_argument(*names, dest=key, default=None, help=_FLAG_HELP[key])

    rep = sub.add_parser("reproduce", help="regenerate a figure or example")
    rep.add_argument("target", choices=sorted(REPRODUCE_TARGETS))
    rep.add_argument("--trials", type=int, default=None, help="override the target's Monte-Carlo budget")
    rep.add_argument("--seed", type=int, default=2008)
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--out-dir", default=None, help="output directory (default $DMTKIT_OUTPUT_DIR or .)")

    thr = sub.add_parser("thresholds", help="SNR convergence thresholds")
    thr.add_argument("--n", type=int, required=True)
    thr.add_argument("--r", type=float, required=True)
    thr.add_argument("--definition", action="append", default=None,
                     help="restrict to one definition (repeatable); default all three")
    thr.add_argument("--json", action="store_true", help="machine-readable output")
    return parser


def _cmd_sweep(args):
    overrides = {k: getattr(args, k) for k in SECTIONS}
    config = load_config(args.config, overrides)
    result = run_sweep(config)
    if result.all_domain_errors:
        print(f"dmtkit: every grid point lies outside the domain of {config.definition}", file=sys.stderr)
        return EXIT_DOMAIN
    for path in write_sweep(result):
        if path != "-":
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_reproduce(args):
    if args.trials is not None and args.trials < 1:
        raise ConfigError("trials", "must be >= 1")
    if args.workers < 1:
        raise ConfigError("workers", "must be >= 1")
    files, summary = reproduce(args.target, trials=args.trials, seed=args.seed, workers=args.workers,
                               out_dir=args.out_dir or output_dir())
    print("\n".join(summary))
    for path in files:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_thresholds(args):
    r = int(args.r) if float(args.r).is_integer() else args.r
    defs = None
    if args.definition:
        try:
            defs = [MuxGainDef.parse(d) for d in args.definition]
        except ValueError as exc:
            raise ConfigError("definition", str(exc)) from None
    rows = threshold_rows(args.n, r, defs)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(format_threshold_table(rows))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {"sweep": _cmd_sweep, "reproduce": _cmd_reproduce, "thresholds": _cmd_thresholds}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"dmtkit: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"dmtkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DmtError as exc:
        print(f"dmtkit: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
