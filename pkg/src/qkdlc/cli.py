"""Command-line interface: ``qkdlc <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 domain or validation error, 3 I/O error.
Data goes to stdout (or ``--output``); diagnostics go to stderr.

Options may also come from a JSON file given with ``--config``; its keys
mirror the long flags (``"fixed-intensity": 1``) and explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import export
from .channel import DEFAULT_MU, ChannelParams, transmittance_from
from .errors import QKDLCError
from .keyrate import Protocol, ProtocolSpec, evaluate
from .linecontrol import (
    FiberEvent,
    TestPulsePlan,
    detect_new_events,
    estimate_leakage,
    load_reflectogram,
    min_detectable_leakage,
    required_test_intensity,
    save_reflectogram,
    synthesize_reflectogram,
)
from .montecarlo import Attack, SimConfig, validate_against_analytic
from .optimize import ProtocolPair, SweepGrid, optimal_intensity, sweep

log = logging.getLogger("qkdlc")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3
WORKERS_ENV = "QKDLC_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_range(text: str) -> list[float]:
    """Parse ``start:stop:count``, ``start:stop:logN``, ``a,b,c`` or a single number.

    >>> parse_range("10:30:3")
    [10.0, 20.0, 30.0]
    >>> parse_range("0.001:0.1:log3")
    [0.001, 0.01, 0.1]
    """
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), parts[2].strip().lower()
            if count.startswith("log"):
                n = int(count[3:])
                if n < 1 or start <= 0 or stop <= 0:
                    raise ValueError
                values = np.logspace(math.log10(start), math.log10(stop), n)
                values[0], values[-1] = start, stop
            else:
                n = int(count)
                if n < 1:
                    raise ValueError
                values = np.linspace(start, stop, n)
            values = [float(v) for v in values]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad range {text!r}; use start:stop:count, start:stop:logN or a comma list"
        ) from None
    return values


def _check_axis(name: str, values) -> list[float]:
    if isinstance(values, (int, float)):
        values = [values]
    values = [float(v) for v in values]
    if not values:
        raise UsageError(f"--{name} is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"--{name} must be strictly increasing")
    return values


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return max(int(raw), 1)
    except ValueError:
        log.warning("ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file whose keys mirror the long flags")
    common.add_argument("--output", "-o", type=Path, help="output file (default: stdout)")
    common.add_argument("--mu", type=float, default=DEFAULT_MU, help="attenuation coefficient in 1/km (default 1/50)")

    p = _Parser(prog="qkdlc", description="Key-rate analysis for line-controlled QKD.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="command")
    sub.required = True

    protocols = [q.value for q in Protocol]

    s = sub.add_parser("rate", parents=[common], help="key rate of one protocol at one operating point")
    s.add_argument("--protocol", choices=protocols, help="protocol variant")
    s.add_argument("--distance", type=float, default=0.0, help="line length D in km")
    s.add_argument("--leak", type=float, default=0.0, help="leak fraction r_E")
    s.add_argument("--intensity", type=float, help="mean photons per signal pulse")

    s = sub.add_parser("optimize", parents=[common], help="intensity maximising the key rate")
    s.add_argument("--protocol", choices=protocols, help="protocol variant")
    s.add_argument("--distance", type=float, default=0.0, help="line length D in km")
    s.add_argument("--leak", type=float, default=0.0, help="leak fraction r_E")

    s = sub.add_parser("sweep", parents=[common], help="rates and ratio over a distance x leak grid")
    s.add_argument("--pair", choices=[q.value for q in ProtocolPair], default="bb84",
                   help="line-controlled protocol and its baseline")
    s.add_argument("--distance", type=parse_range, help="distances: start:stop:count, start:stop:logN or a,b,c")
    s.add_argument("--leak", type=parse_range, help="leak fractions, same syntax as --distance")
    s.add_argument("--fixed-intensity", type=float, help="pin both intensities instead of optimising")
    s.add_argument("--format", choices=["csv", "json", "svg"], help="output format (default: from file suffix)")
    s.add_argument("--value", choices=list(export.VALUE_COLUMNS), default="ratio", help="column plotted by svg")
    s.add_argument("--scale", choices=["linear", "log"], default="log", help="svg colour scale")
    s.add_argument("--workers", type=int, default=_default_workers(),
                   help=f"concurrent cells (default ${WORKERS_ENV} or 1); output does not depend on it")

    s = sub.add_parser("heatmap", parents=[common], help="render a sweep CSV as an SVG heatmap")
    s.add_argument("--input", type=Path, help="sweep CSV")
    s.add_argument("--value", choices=list(export.VALUE_COLUMNS), default="ratio", help="column to plot")
    s.add_argument("--scale", choices=["linear", "log"], default="log", help="colour scale")
    s.add_argument("--title", help="plot title")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the analytic probabilities")
    s.add_argument("--protocol", choices=protocols, help="protocol variant")
    s.add_argument("--attack", choices=[a.value for a in Attack], default="leak-tap", help="eavesdropping model")
    s.add_argument("--distance", type=float, default=0.0, help="line length D in km")
    s.add_argument("--leak", type=float, default=0.0, help="leak fraction r_E (leak-tap only)")
    s.add_argument("--intensity", type=float, help="mean photons per signal pulse")
    s.add_argument("--pulses", type=int, default=1_000_000, help="number of pulses")
    s.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    s.add_argument("--workers", type=int, default=_default_workers(),
                   help=f"concurrent blocks (default ${WORKERS_ENV} or 1); output does not depend on it")

    s = sub.add_parser("transmit-test", parents=[common], help="test-pulse intensity and leak resolution")
    s.add_argument("--distance", type=float, default=0.0, help="line length D in km")
    s.add_argument("--leak-min", type=float, help="target resolvable leak; prints the required test intensity")
    s.add_argument("--intensity", type=float, help="test-pulse photons; prints the resolvable leak")
    s.add_argument("--simulate", action="store_true", help="also simulate a leak estimate (needs --intensity)")
    s.add_argument("--leak", type=float, default=0.0, help="true leak used by --simulate")
    s.add_argument("--tests", type=int, default=100, help="number of test pulses for --simulate")
    s.add_argument("--seed", type=int, default=0, help="seed for --simulate")

    s = sub.add_parser("reflect-synth", parents=[common], help="write a synthetic reflectogram (CSV + JSON sidecar)")
    s.add_argument("--length", type=float, default=100.0, help="fibre length in km")
    s.add_argument("--spacing", type=float, default=0.1, help="sample spacing in km")
    s.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma in dB")
    s.add_argument("--event", action="append", default=[], metavar="KIND:POS:DB",
                   help="event to inject, e.g. step:42:0.5 or spike:10:1 (repeatable)")
    s.add_argument("--seed", type=int, default=0, help="noise seed")

    s = sub.add_parser("reflect-detect", parents=[common], help="compare a trace with its baseline")
    s.add_argument("--current", type=Path, help="current trace CSV")
    s.add_argument("--baseline", type=Path, help="documented baseline trace CSV")
    s.add_argument("--threshold", type=float, default=0.05, help="detection threshold in dB")
    p.commands = sub.choices
    return p


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except OSError:
        raise
    except ValueError as exc:
        raise UsageError(f"config file {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {args.config} must hold a JSON object")
    sub = parser.commands[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise UsageError(f"config file {args.config}: unknown option {key!r} for {args.command}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"{args.command}: --{name.replace('_', '-')} is required")


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _emit_json(doc, output):
    text = json.dumps(_json_safe(doc), indent=2) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


# ---------------------------------------------------------------------------
# commands

def cmd_rate(args):
    _need(args, "protocol", "intensity")
    T = transmittance_from(args.distance, args.mu)
    pt = evaluate(args.protocol, T, args.leak, args.intensity)
    _emit_json({
        "protocol": args.protocol, "distance_km": args.distance, "leak_fraction": args.leak,
        "mu": args.mu, "transmittance": T, "intensity": args.intensity,
        "rate": pt.rate, "conclusive_prob": pt.conclusive_prob, "eve_info": pt.eve_info,
    }, args.output)


def cmd_optimize(args):
    _need(args, "protocol")
    T = transmittance_from(args.distance, args.mu)
    opt = optimal_intensity(args.protocol, T, args.leak)
    pt = evaluate(args.protocol, T, args.leak, opt.intensity)
    if opt.degenerate:
        print(f"warning: {args.protocol} rate is zero for every intensity", file=sys.stderr)
    _emit_json({
        "protocol": args.protocol, "distance_km": args.distance, "leak_fraction": args.leak,
        "mu": args.mu, "transmittance": T, "intensity": opt.intensity, "rate": opt.rate,
        "conclusive_prob": pt.conclusive_prob, "eve_info": pt.eve_info, "degenerate": opt.degenerate,
    }, args.output)


def _infer_format(args) -> str:
    if args.format:
        return args.format
    suffix = Path(args.output).suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json", "svg") else "csv"


def cmd_sweep(args):
    _need(args, "distance", "leak", "output")
    distances = _check_axis("distance", args.distance)
    leaks = _check_axis("leak", args.leak)
    grid = SweepGrid(distances, leaks, args.mu, args.pair)
    log.info("sweeping %d x %d cells with %d worker(s)", len(distances), len(leaks), args.workers)
    records = sweep(grid, fixed_intensity=args.fixed_intensity, workers=args.workers)
    fmt = _infer_format(args)
    if fmt == "csv":
        export.emit_csv(records, args.output)
    elif fmt == "json":
        config = {"pair": args.pair, "mu": args.mu, "distances": distances, "leaks": leaks,
                  "fixed_intensity": args.fixed_intensity}
        export.emit_json(records, args.output, config=_json_safe(config))
    else:
        title = f"{args.pair}: {args.value}"
        export.emit_svg_heatmap(records, args.value, args.scale, args.output, title=title)


def cmd_heatmap(args):
    _need(args, "input", "output")
    records = export.read_csv(args.input)
    export.emit_svg_heatmap(records, args.value, args.scale, args.output, title=args.title)


def cmd_simulate(args):
    _need(args, "protocol", "intensity")
    config = SimConfig(
        protocol=ProtocolSpec(Protocol.parse(args.protocol), args.intensity),
        channel=ChannelParams(args.mu, args.distance, args.leak),
        attack=args.attack,
        n_pulses=args.pulses,
        seed=args.seed,
    )
    report = validate_against_analytic(config, workers=args.workers)
    doc = {"protocol": args.protocol, "attack": args.attack, "distance_km": args.distance,
           "leak_fraction": args.leak, "intensity": args.intensity, "mu": args.mu,
           "n_pulses": args.pulses, "seed": args.seed}
    doc.update(report.as_dict())
    _emit_json(doc, args.output)


def cmd_transmit_test(args):
    if args.leak_min is None and args.intensity is None:
        raise UsageError("transmit-test: give --leak-min or --intensity")
    doc = {"distance_km": args.distance, "mu": args.mu,
           "transmittance": transmittance_from(args.distance, args.mu)}
    if args.leak_min is not None:
        doc["leak_min"] = args.leak_min
        doc["required_test_intensity"] = required_test_intensity(args.leak_min, args.distance, args.mu)
    if args.intensity is not None:
        doc["test_intensity"] = args.intensity
        doc["min_detectable_leakage"] = min_detectable_leakage(args.intensity, args.distance, args.mu)
    if args.simulate:
        _need(args, "intensity")
        plan = TestPulsePlan.random(args.intensity, args.tests, seed=args.seed)
        est = estimate_leakage(plan, ChannelParams(args.mu, args.distance, args.leak), seed=args.seed)
        doc["estimate"] = {"true_leak": args.leak, "r_hat": est.r_hat, "std_err": est.std_err,
                           "n_used": est.n_used, "usable": est.usable, "suspicious": est.suspicious}
        if not est.usable:
            print("warning: expected received photons per test pulse too low; estimate unusable",
                  file=sys.stderr)
    _emit_json(doc, args.output)


def _parse_event(text: str) -> FiberEvent:
    try:
        kind, pos, mag = text.split(":")
        return FiberEvent(float(pos), kind.strip().lower(), float(mag))
    except ValueError as exc:
        raise UsageError(f"bad --event {text!r} (expected step:POS:DB or spike:POS:DB): {exc}") from None


def cmd_reflect_synth(args):
    _need(args, "output")
    events = [_parse_event(e) for e in args.event]
    trace = synthesize_reflectogram(args.length, args.mu, events, args.spacing, args.noise, args.seed)
    save_reflectogram(trace, args.output)


def cmd_reflect_detect(args):
    _need(args, "current", "baseline")
    det = detect_new_events(load_reflectogram(args.current), load_reflectogram(args.baseline), args.threshold)
    _emit_json({
        "alarm": det.alarm,
        "threshold_db": args.threshold,
        "events": [{"position_km": e.position_km, "kind": e.kind.value, "magnitude_db": e.magnitude_db}
                   for e in det.events],
    }, args.output)
    if det.alarm:
        print(f"ALARM: {len(det.events)} new event(s) on the line", file=sys.stderr)


COMMANDS = {
    "rate": cmd_rate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "heatmap": cmd_heatmap,
    "simulate": cmd_simulate,
    "transmit-test": cmd_transmit_test,
    "reflect-synth": cmd_reflect_synth,
    "reflect-detect": cmd_reflect_detect,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QKDLCError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
