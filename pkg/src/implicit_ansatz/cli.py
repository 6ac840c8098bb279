"""Command-line entry point: run one scenario config and write its residual report.

Exit statuses: 0 when the report passes, 1 when residuals or convergence
fail, 2 for usage errors, 3 for invalid configs, 4 when the report cannot
be written.
"""

import argparse
import os
import sys

from . import __version__
from .errors import ConfigError
from .runner import EQUATIONS, FORMATS, load_config, run_scenario

OUTPUT_DIR_ENV = "IMPLICIT_ANSATZ_OUTPUT_DIR"

EXIT_OK, EXIT_RESIDUAL, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on its own errors; the config check below needs the same
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="implicit-ansatz", description="Solve, differentiate and check an implicit-ansatz scenario.")
    p.add_argument("--config", metavar="PATH", help="scenario config (JSON)")
    p.add_argument("--out", metavar="PATH", help="report destination (default: config output.path, else stdout)")
    p.add_argument("--format", choices=FORMATS, help="report format (default json)")
    p.add_argument("--grid-scale", type=float, metavar="FACTOR", help="multiply every grid axis count")
    p.add_argument("--tolerance", type=float, help="override the residual tolerance")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--list-equations", action="store_true", help="print the supported equation ids and exit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _destination(args, cfg, fmt):
    if args.out:
        return args.out
    if cfg.output.get("path"):
        return cfg.output["path"]
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root:
        return os.path.join(root, f"{cfg.scenario_id}.{fmt}")
    return None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_equations:
        print("\n".join(EQUATIONS))
        return EXIT_OK
    if args.config is None:
        parser.error("the following arguments are required: --config")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.rng_seed = args.seed
        if args.tolerance is not None:
            cfg.tolerances["residual"] = args.tolerance
        if args.format is not None:
            cfg.output["format"] = args.format
        cfg.validate()
        report = run_scenario(cfg, grid_scale=args.grid_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    fmt = cfg.output["format"]
    text = report.render(fmt)
    dest = _destination(args, cfg, fmt)
    if dest is None:
        sys.stdout.write(text)
    else:
        try:
            parent = os.path.dirname(dest)
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(dest, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return EXIT_IO
        s = report.summary()
        print(f"{report.scenario_id}: {s['converged']}/{s['points']} converged, max residual {s['max_abs']}, "
              f"{'pass' if report.passed else 'FAIL'} -> {dest}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_RESIDUAL


if __name__ == "__main__":
    sys.exit(main())
