"""
MAIN ORCHESTRATOR SCRIPT
------------------------
Command-line front end of the bordered-system spectral toolkit.

Workflow Management:
* Stage 1: Load and validate the system descriptor, apply --set overrides.
* Stage 2: Run the requested analysis (eig, locus, place, regions, sens,
  dpi or simulate).
* Stage 3: Render JSON or CSV and write it atomically (or to stdout).

Exit codes: 0 on success, 2 on validation errors, 3 on numerical failures.
Errors are reported on standard error as JSON:
    {"error": ..., "category": ..., "message": ..., "details": {...}}

Usage:
    python main.py eig --system sources/figure_one_system.json --set omega1=0.5
    python main.py locus --system sources/figure_one_system.json --param omega1 \\
        --lo 0.1 --hi 1.2 --samples 111 --format csv --out results/locus.csv
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd

import config
from modules import (data_loader, exporter, locus, placement, regions, sensitivity, spectra,
                     validator, valuation)
from modules.charpoly import Polynomial

logger = logging.getLogger(__name__)


def setup_logging():
    """Configure logging; standard output is reserved for results."""
    handlers: List[logging.Handler] = [
        logging.FileHandler(config.PATHS['log_file'], mode='a', encoding='utf-8')
    ]
    if config.LOGGING['console']:
        handlers.append(logging.StreamHandler(sys.stderr))
    logging.basicConfig(
        level=getattr(logging, config.LOGGING['level']),
        format=config.LOGGING['format'],
        datefmt=config.LOGGING['datefmt'],
        handlers=handlers,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='main.py',
        description='Eigenvalue loci, zero placement and dividend-policy probes '
                    'for bordered diagonal systems.',
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--system', required=True, help='system descriptor (JSON)')
    common.add_argument('--out', default=None, help='output file (default: stdout)')
    common.add_argument('--format', choices=exporter.FORMATS, default='json')
    common.add_argument('--seed', type=int, default=None, help='seed for sampled commands')
    common.add_argument('--set', dest='overrides', action='append', default=[],
                        metavar='NAME=VALUE', help='override omegaK or beta (repeatable)')

    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('eig', parents=[common], help='labeled eigenvalues')

    trace = commands.add_parser('locus', parents=[common], help='one-parameter root locus')
    trace.add_argument('--param', required=True, help='omegaK or beta')
    trace.add_argument('--lo', type=float, required=True)
    trace.add_argument('--hi', type=float, required=True)
    trace.add_argument('--samples', type=int, required=True)
    trace.add_argument('--spacing', choices=('linear', 'log'), default='linear')

    place = commands.add_parser('place', parents=[common], help='policy for a target polynomial')
    place.add_argument('--target', required=True,
                       help='monic coefficients [1, t1, ..., t_{n+1}] as JSON or a JSON file')

    region = commands.add_parser('regions', parents=[common], help='containment tests')
    region.add_argument('--epsilon', type=float, default=None)

    commands.add_parser('sens', parents=[common], help='eigenvalue sensitivities')

    probe = commands.add_parser('dpi', parents=[common], help='dividend-policy irrelevance probe')
    probe.add_argument('--rate', type=float, required=True)
    probe.add_argument('--radius', type=float, default=config.DPI['default_radius'])
    probe.add_argument('--samples', type=int, default=config.DPI['default_samples'])
    probe.add_argument('--continuous', action='store_true')
    probe.add_argument('--z0', default=None, help='initial z0 as JSON array')
    probe.add_argument('--d0', type=float, default=None)

    simulate = commands.add_parser('simulate', parents=[common], help='forward simulation')
    simulate.add_argument('--horizon', type=int, required=True)
    simulate.add_argument('--z0', default=None, help='initial z0 as JSON array')
    simulate.add_argument('--d0', type=float, default=None)
    return parser


# ============================================================
# COMMANDS
# ============================================================

def _roots_frame(roots: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({
        'index': np.arange(1, roots.size + 1),
        're': roots.real,
        'im': roots.imag,
        'is_real': roots.imag == 0.0,
    })


def cmd_eig(sys_, args) -> Tuple[Any, pd.DataFrame]:
    labeling = spectra.label_roots(sys_)
    roots = labeling.as_array()
    payload = {'system': sys_.to_dict(), 'roots': roots, 'is_real': labeling.real_mask}
    return payload, _roots_frame(roots)


def cmd_locus(sys_, args) -> Tuple[Any, pd.DataFrame]:
    trace = locus.trace_locus(sys_, args.param, args.lo, args.hi, args.samples, args.spacing)
    return trace.to_dict(), trace.to_frame()


def cmd_place(sys_, args) -> Tuple[Any, pd.DataFrame]:
    target = Polynomial(np.array(data_loader.parse_array(args.target, 'target')))
    result = placement.place_zeros(sys_.spectrum, sys_.signs, target)
    payload = result.to_dict()
    payload['cauchy_radius'] = placement.cauchy_radius(target)
    payload['in_cauchy_polytope'] = placement.in_cauchy_polytope(target, sys_.spectrum.lambdas[0])
    frame = pd.DataFrame({'coordinate': [f'omega{j}' for j in range(1, sys_.n + 1)] + ['beta'],
                          'value': list(result.policy.as_vector())})
    return payload, frame


def cmd_regions(sys_, args) -> Tuple[Any, pd.DataFrame]:
    roots = spectra.eigenvalues(sys_).as_array()
    rows = regions.region_rows(sys_, roots, args.epsilon)
    bounds = regions.eigenvalue_bounds(sys_, roots, args.epsilon)
    payload = {
        'roots': rows,
        'gerschgorin': regions.gerschgorin(sys_).to_dict(),
        'bounds': bounds.to_dict(),
    }
    frame = pd.DataFrame([
        {'re': r['root'].real, 'im': r['root'].imag, 'strip': r['strip'], 'star': r['star'],
         'gerschgorin': r['gerschgorin'], 'annulus': r['annulus']}
        for r in rows
    ])
    return payload, frame


def cmd_sens(sys_, args) -> Tuple[Any, pd.DataFrame]:
    labeling = spectra.label_roots(sys_)
    matrix = sensitivity.dkappa(sys_, labeling)
    try:
        signs: Optional[Dict] = sensitivity.sign_check(sys_, labeling).to_dict()
    except validator.HypothesesNotMet:
        signs = None
    payload = {
        'roots': labeling.as_array(),
        'matrix': matrix.d,
        'valid_mask': matrix.valid_mask,
        'sign_check': signs,
    }
    return payload, matrix.to_frame()


def cmd_dpi(sys_, args) -> Tuple[Any, pd.DataFrame]:
    init = data_loader.load_initial_state(sys_.n, args.z0, args.d0)
    report = valuation.dpi_probe(sys_, init, args.rate, args.radius, args.samples,
                                 seed=args.seed, continuous=args.continuous)
    return report.to_dict(), report.to_frame()


def cmd_simulate(sys_, args) -> Tuple[Any, pd.DataFrame]:
    init = data_loader.load_initial_state(sys_.n, args.z0, args.d0)
    trajectory = valuation.simulate(sys_, init, args.horizon)
    frame = trajectory.to_frame()
    return {'trajectory': frame.to_dict(orient='records')}, frame


HANDLERS: Dict[str, Callable] = {
    'eig': cmd_eig,
    'locus': cmd_locus,
    'place': cmd_place,
    'regions': cmd_regions,
    'sens': cmd_sens,
    'dpi': cmd_dpi,
    'simulate': cmd_simulate,
}


def _report_error(error) -> int:
    sys.stderr.write(json.dumps(exporter.jsonable(error.to_dict())) + '\n')
    return error.exit_code


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logger.info("=" * 60)
    logger.info(f"SPECTRA COMMAND '{args.command}' STARTED")
    logger.info("=" * 60)

    try:
        logger.info("[STAGE 1/3] LOADING SYSTEM")
        system = data_loader.load_system(args.system)
        system = data_loader.apply_overrides(system, args.overrides)

        logger.info(f"[STAGE 2/3] RUNNING {args.command.upper()}")
        payload, frame = HANDLERS[args.command](system, args)

        logger.info("[STAGE 3/3] EXPORTING")
        text = exporter.render(payload, frame, args.format)
        exporter.write_output(text, args.out)

    except validator.ValidationError as e:
        logger.error(f"\n✗ VALIDATION ERROR: {e}")
        return _report_error(e)
    except validator.NumericalError as e:
        logger.error(f"\n✗ NUMERICAL ERROR: {e}")
        return _report_error(e)

    logger.info("✓ Command completed")
    return 0


def main():
    setup_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
