"""Command-line front end.

Exit codes: 0 every row converged, 2 usage or configuration error,
3 at least one row did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from .fock import CutoffError
from .sweep import (
    DIRECTIONS,
    FORMATS,
    PRESETS,
    ConfigError,
    SweepConfig,
    entropy_table,
    figure_preset,
    run_sweep,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARTIAL = 3

log = logging.getLogger("pskqkd")


def _add_output(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--format", choices=FORMATS)


def _add_protocol(p: argparse.ArgumentParser, many: bool):
    nargs = "+" if many else None
    p.add_argument("--n", nargs=nargs, help="alphabet size (or 'inf')")
    p.add_argument("--z", nargs=nargs, type=float, help="constellation radius")
    chan = p.add_mutually_exclusive_group()
    chan.add_argument("--db", nargs=nargs, type=float, help="attenuation in dB")
    chan.add_argument("--tau", nargs=nargs, type=float, help="transmissivity")
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--nbar", nargs=nargs, type=float, help="thermal photons of the cloner")
    noise.add_argument("--epsilon", nargs=nargs, type=float, help="excess noise (SNU)")
    p.add_argument("--epsilon-convention", choices=("input", "output"))
    p.add_argument("--direction", choices=DIRECTIONS)
    p.add_argument("--vm", type=float, help="Gaussian modulation variance (default 2 z^2)")
    p.add_argument("--beta", type=float, help="reconciliation efficiency")
    p.add_argument("--cutoff", type=int, help="Fock dimension per mode")
    p.add_argument("--grid-radial", type=int)
    p.add_argument("--grid-angular", type=int)
    p.add_argument("--mode", choices=("exact", "strict-paper"))
    p.add_argument("--no-convergence-check", dest="check_convergence",
                   action="store_false", default=None)
    p.add_argument("--workers", type=int)
    _add_output(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pskqkd", description="Key rates of phase-encoded coherent-state QKD.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ent = sub.add_parser("entropy", help="source entropy versus radius")
    ent.add_argument("--n", nargs="+", default=["4"])
    ent.add_argument("--z", nargs="+", type=float, default=[0.5])
    _add_output(ent)

    _add_protocol(sub.add_parser("rate", help="a single protocol point"), many=False)

    sw = sub.add_parser("sweep", help="config-driven sweep; flags override the file")
    sw.add_argument("--config", help="JSON configuration file")
    _add_protocol(sw, many=True)

    fig = sub.add_parser("figure", help="reproduce a figure's data")
    fig.add_argument("name", help=f"one of {', '.join(PRESETS)}")
    fig.add_argument("--workers", type=int, default=1)
    _add_output(fig)
    return parser


_FLAG_FIELDS = ("n", "z", "db", "tau", "nbar", "epsilon", "epsilon_convention", "direction",
                "vm", "beta", "cutoff", "grid_radial", "grid_angular", "mode",
                "check_convergence", "out", "format", "workers")


def config_from_args(args: argparse.Namespace, base: dict | None = None) -> SweepConfig:
    data = dict(base or {})
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return SweepConfig.from_mapping(data)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "entropy":
            table = entropy_table(args.n, args.z)
            _emit(table.render(args.format or "csv"), args.out)
            return EXIT_OK
        if args.command == "figure":
            table = figure_preset(args.name, workers=args.workers)
            fmt, out = args.format or "csv", args.out
        else:
            base = {}
            if getattr(args, "config", None):
                base = json.loads(Path(args.config).read_text())
            cfg = config_from_args(args, base)
            table = run_sweep(cfg)
            fmt, out = cfg.format, cfg.out
    except (ConfigError, CutoffError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(table.render(fmt), out)
    bad = [r for r in table.rows if not r.get("converged", True)]
    if bad:
        log.warning("%d of %d rows did not converge", len(bad), len(table.rows))
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
