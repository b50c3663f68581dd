"""Command-line front end: certificate checks, the two experiments and the histories demo."""

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from . import __version__, linalg
from .config import Config, config
from .exceptions import ConfigurationError, PolicyError, RealityLabError, SetupError
from .experiments import (
    AnalysisReport,
    EprExperiment,
    IdealExperiment,
    build_ideal,
    build_singlet,
    direction_from_angle,
    inference_table,
)
from .export import Exporter, write_family_dump, write_support_dump
from .histories import contradiction_demo, contradiction_family_dump
from .presets import PresetManager
from .quantum import conditional_probability, joint_probability

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

COMMANDS = ("verify", "epr", "ideal", "histories")


@dataclass
class RunConfig:
    """Resolved settings for one invocation."""

    command: str
    n: int
    seed: int
    extension: str
    tol: float
    format: str
    policy: str
    theta_a: float
    theta_b: float
    threads: int
    out: Optional[str] = None
    dump: Optional[str] = None


@dataclass
class Certificate:
    """One identity check and its outcome."""

    name: str
    passed: bool
    value: str

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "passed": self.passed, "value": self.value}


def _within(name: str, deviation: float, tol: float) -> Certificate:
    return Certificate(name, bool(deviation <= tol), f"deviation {deviation:.3e}")


def build_certificates(tol: float) -> List[Certificate]:
    """Evaluate every algebraic identity the experiments rely on at tolerance ``tol``."""
    build_tol = max(tol, linalg.DEFAULT_TOL)
    ideal = build_ideal(build_tol)
    singlet = build_singlet(tol=build_tol)
    psi = ideal.state
    certs = [
        _within("psi_ideal normalized", abs(linalg.norm(psi.vec) - 1.0), tol),
        _within("E psi = T psi", linalg.norm(ideal.E.op @ psi.vec - ideal.T.op @ psi.vec), tol),
        _within("G psi = Y psi", linalg.norm(ideal.G.op @ psi.vec - ideal.Y.op @ psi.vec), tol),
    ]
    for a, given in ((ideal.E, ideal.T), (ideal.T, ideal.E), (ideal.G, ideal.Y), (ideal.Y, ideal.G)):
        p = conditional_probability(a, given, psi, build_tol)
        certs.append(_within(f"p({a.label}|{given.label}) = 1", abs(p - 1.0), tol))
    certs.append(_within("[T,Y] = 0", linalg.commutator_norm(ideal.T.op, ideal.Y.op), tol))
    eg = linalg.commutator_norm(ideal.E.op, ideal.G.op)
    certs.append(Certificate("[E,G] != 0", eg > 0.1, f"norm {eg:.6f}"))
    for name, projector in ideal.named_projectors().items():
        mat = np.asarray(projector)
        deviation = max(linalg.frobenius_norm(mat @ mat - mat), linalg.frobenius_norm(mat.conj().T - mat))
        certs.append(_within(f"{name} is a projector", deviation, tol))

    certs.append(_within("singlet normalized", abs(linalg.norm(singlet.state.vec) - 1.0), tol))
    for a, partner in ((singlet.A, singlet.P), (singlet.B, singlet.Q)):
        same = joint_probability([a, partner], (1, 1), singlet.state, build_tol)
        opposite = joint_probability([a, partner], (1, -1), singlet.state, build_tol)
        certs.append(_within(f"p({a.label}=1, {partner.label}=1) = 0", abs(same), tol))
        certs.append(_within(f"p({a.label}=1, {partner.label}=-1) = 1/2", abs(opposite - 0.5), tol))

    rows = [(r.t, r.y, r.e, r.g) for r in inference_table(ideal)]
    certs.append(Certificate("inference table is the identity on (t, y)", all(t == e and y == g for t, y, e, g in rows),
                             f"{len(rows)} rows"))
    return certs


def cmd_verify(cfg: RunConfig) -> int:
    """Print one line per certificate; exit 0 iff all pass."""
    certs = build_certificates(cfg.tol)
    data = {"certificates": [c.to_dict() for c in certs], "passed": all(c.passed for c in certs)}
    if not Exporter().export(data, cfg.format, cfg.out):
        return EXIT_USAGE
    return EXIT_OK if data["passed"] else EXIT_CHECK_FAILED


def _finish(report: AnalysisReport, cfg: RunConfig, support=None, families=None) -> int:
    if not Exporter().export(report.to_dict(), cfg.format, cfg.out):
        return EXIT_USAGE
    if cfg.dump:
        if support is not None:
            written = write_support_dump(support, cfg.dump)
        else:
            written = write_family_dump(families, cfg.dump)
        if not written:
            return EXIT_USAGE
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_epr(cfg: RunConfig) -> int:
    """Bohm-EPR analysis."""
    policy = PresetManager().resolve(cfg.policy)
    setup = build_singlet(direction_from_angle(cfg.theta_a), direction_from_angle(cfg.theta_b), cfg.tol)
    runner = EprExperiment(cfg.n, cfg.seed, cfg.extension, policy, setup, cfg.threads, cfg.tol)
    return _finish(runner.run(), cfg, runner.support)


def cmd_ideal(cfg: RunConfig) -> int:
    """Ideal-experiment analysis."""
    runner = IdealExperiment(cfg.n, cfg.seed, cfg.extension, threads=cfg.threads, tol=cfg.tol)
    return _finish(runner.run(), cfg, runner.support)


def cmd_histories(cfg: RunConfig) -> int:
    """Consistent-histories contradiction demo."""
    if cfg.extension != "strict":
        logger.warning("The histories demo always uses the strict extension")
    report = contradiction_demo(cfg.n, cfg.seed, cfg.tol)
    return _finish(report, cfg, families=contradiction_family_dump(cfg.tol) if cfg.dump else None)


HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    "verify": cmd_verify,
    "epr": cmd_epr,
    "ideal": cmd_ideal,
    "histories": cmd_histories,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per analysis; every flag works after the subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--n', type=int, help='Number of specimens (default from config.yaml)')
    common.add_argument('--seed', type=int, help='Seed of the keyed generator ($REALITYLAB_SEED wins)')
    common.add_argument('--extension', choices=Config.EXTENSIONS, help='Correlation extension rule')
    common.add_argument('--tol', type=float, help='Algebraic tolerance')
    common.add_argument('--format', choices=Config.FORMATS, help='Report format')
    common.add_argument('--out', help='Write the report to this file instead of stdout')
    common.add_argument('--policy', help='EPR policy: preset name or inline spec "A,Q:0.5;P,B:0.5"')
    common.add_argument('--theta-a', type=float, help='Polar angle of the first EPR direction (radians)')
    common.add_argument('--theta-b', type=float, help='Polar angle of the second EPR direction (radians)')
    common.add_argument('--threads', type=int, help='Worker threads for ensemble sampling')
    common.add_argument('--config', help='Path to config file (default: config.yaml)')
    common.add_argument('--dump', help='Support dump (.ndjson, .jsonl, .csv); family dump (.json) for histories')
    common.add_argument('--verbose', '-v', action='store_true', help='Debug logging')

    parser = argparse.ArgumentParser(
        prog='realitylab',
        description='Verify objective-value claims on concrete supports',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check every algebraic identity
  realitylab verify

  # Bohm-EPR under the strict extension
  realitylab epr --extension strict --policy mixed --format json

  # Joint T,Y measurement and the inferred E,G table
  realitylab ideal --n 100000 --seed 42

  # Consistent-histories contradiction
  realitylab histories --out results/histories.json --format json
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='{' + ','.join(COMMANDS) + '}')
    subparsers.add_parser('verify', parents=[common], help='Run all algebraic certificates')
    subparsers.add_parser('epr', parents=[common], help='Bohm-EPR analysis')
    subparsers.add_parser('ideal', parents=[common], help='Ideal-experiment analysis')
    subparsers.add_parser('histories', parents=[common], help='Consistent-histories contradiction demo')
    return parser


def configure_logging(verbose: bool) -> None:
    """Route library logging to stderr through rich."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge command-line flags over the config file.

    Raises:
        ConfigurationError: If a value is out of range
    """
    settings = Config(args.config) if args.config else config

    def pick(value, fallback):
        return fallback if value is None else value

    cfg = RunConfig(
        command=args.command,
        n=pick(args.n, settings.n),
        seed=settings.resolve_seed(args.seed),
        extension=pick(args.extension, settings.extension),
        tol=pick(args.tol, settings.tol),
        format=pick(args.format, settings.format),
        policy=pick(args.policy, settings.policy),
        theta_a=pick(args.theta_a, settings.theta_a),
        theta_b=pick(args.theta_b, settings.theta_b),
        threads=pick(args.threads, settings.threads),
        out=args.out,
        dump=args.dump,
    )
    if cfg.n < 1:
        raise ConfigurationError(f"--n must be positive, got {cfg.n}")
    if cfg.threads < 1:
        raise ConfigurationError(f"--threads must be positive, got {cfg.threads}")
    if not (cfg.tol > 0 and math.isfinite(cfg.tol)):
        raise ConfigurationError(f"--tol must be a positive number, got {cfg.tol}")
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        0 when every check passed, 1 when a check failed, 2 on usage or configuration errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE

    configure_logging(args.verbose)
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except (ConfigurationError, PolicyError, SetupError) as e:
        logger.error(f"{e}")
        return EXIT_USAGE
    except RealityLabError as e:
        logger.error(f"Check failed: {e}")
        return EXIT_CHECK_FAILED


if __name__ == '__main__':
    sys.exit(main())
