"""Command-line entry point: ``polfock <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .circuit import CircuitConfig, build_canonical_circuit
from .elements import DistinguishabilityModel
from .errors import ConfigError, InvariantError
from .sources import InputSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

DEFAULT_FORMAT = {"truth-table": "csv", "hom-scan": "csv"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="polfock", description="Heralded polarization CNOT simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in (*experiments.SCENARIOS, "dump-circuit"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--ideal", action="store_true", help="ideal single-photon sources")
        p.add_argument("--epsilon", type=float, help="SPDC pair amplitude (input pass)")
        p.add_argument("--ancilla-epsilon", type=float, help="ancilla-pass pair amplitude")
        p.add_argument("--input", help="input spec, e.g. +H or four complex amplitudes")
        p.add_argument("--delay", type=float, help="ancilla-pair delay in fs")
        p.add_argument("--arm-offset", type=float, help="residual extra delay on a3 in fs")
        p.add_argument("--coherence-time", type=float, help="photon coherence time (FWHM) in fs")
        p.add_argument("--pump-duration", type=float, help="pump pulse duration in fs")
        p.add_argument("--delays", help="HOM scan delays, start:stop:points or a list")
        p.add_argument("--threshold-inference", action="store_true",
                       help="lab-style conditioning with threshold detectors")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("text", "csv"), help="report format")
    return parser


def _model_from_args(args, base):
    fields = (args.delay, args.arm_offset, args.coherence_time, args.pump_duration)
    if base is None and all(f is None for f in fields):
        return None
    base = base or DistinguishabilityModel()
    try:
        return DistinguishabilityModel(
            base.pump_duration if args.pump_duration is None else args.pump_duration,
            base.coherence_time if args.coherence_time is None else args.coherence_time,
            base.delay if args.delay is None else args.delay,
            base.arm_offset if args.arm_offset is None else args.arm_offset,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_args(args):
    """Merge an optional config file with command-line overrides."""
    if args.config:
        try:
            config, settings = experiments.load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        config, settings = CircuitConfig(), experiments.ScanSettings()
    if args.ideal and args.epsilon is not None:
        raise ConfigError("--ideal and --epsilon are mutually exclusive")
    changes = {}
    if args.ideal:
        changes.update(ideal_sources=True, epsilon=None)
    elif args.epsilon is not None:
        changes.update(ideal_sources=False, epsilon=args.epsilon)
    if args.input is not None:
        changes["input"] = InputSpec.parse(args.input)
    elif args.command in ("entangle", "hom-scan") and not args.config:
        changes["input"] = InputSpec.from_tokens("+H")
    changes["distinguishability"] = _model_from_args(args, config.distinguishability)
    if args.threshold_inference:
        changes["threshold_inference"] = True
    config = config.with_(**changes)
    if args.delays is not None or args.ancilla_epsilon is not None:
        settings = experiments.ScanSettings(
            experiments.parse_delays(args.delays) if args.delays is not None else settings.delays,
            settings.epsilon_factor,
            args.ancilla_epsilon if args.ancilla_epsilon is not None else settings.ancilla_epsilon,
        )
    return config, settings


def render(args, config, settings):
    if args.command == "dump-circuit":
        return build_canonical_circuit(config).dump()
    report = experiments.SCENARIOS[args.command](config, settings)
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "text")
    return report.to_csv() if fmt == "csv" else report.to_text()


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        config, settings = config_from_args(args)
        text = render(args, config, settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
