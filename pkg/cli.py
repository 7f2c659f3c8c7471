#!/usr/bin/env python3
"""
Command-line entry points for the alignment kinetics solver.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
precondition failure, 3 failed acceptance check.
"""
import argparse
import logging
import os
import sys
import time

import humanize
import numpy as np

from asymptotics import (
    DiffusionRegime, backward_diffusion_demo, initial_layer_solve, layer_certificate, layer_derivative_decay,
)
from config import load_config, synthesize_initial
from errors import AcceptanceError, ConfigError, PreconditionError
from kinetic_solver import HomogeneousState, solve_homogeneous, solve_kinetic
from logger_config import setup_logger
from model import Grid, MacroField, Orientation, mass
from report_writer import write_homogeneous_csv, write_layer_csv, write_report, write_trajectory_csv
from verification import (
    epsilon_sweep, limit_check, lower_bound_check, mass_drift, micro_refinement, run_selftest,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PRECONDITION = 2
EXIT_ACCEPTANCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; usage errors map to 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _out_dir(args, config):
    out = args.out or config.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _elapsed(start):
    return humanize.naturaldelta(time.perf_counter() - start, minimum_unit='milliseconds')


def cmd_simulate(args, config):
    grid = config.grid()
    f0 = synthesize_initial(config.initial_data, grid)
    params = config.model_params()
    start = time.perf_counter()
    traj = solve_kinetic(f0, params, grid, config.T, sample_every=config.sample_every)
    logger.info(f"Simulated {config.T:g} time units on {grid.n_cells} cells in {_elapsed(start)}")

    out = _out_dir(args, config)
    write_trajectory_csv(os.path.join(out, 'trajectory.csv'), traj)
    bounds = lower_bound_check(traj)
    write_report(os.path.join(out, 'simulate.json'), {
        'mu': traj.mu,
        'mass_initial': mass(f0, grid),
        'mass_drift': mass_drift(traj),
        'bounds': bounds._asdict(),
        'samples': len(traj),
    }, config)
    return EXIT_OK


def cmd_homogeneous(args, config):
    h0 = HomogeneousState(config.initial_data.plus.mean, config.initial_data.minus.mean)
    states = solve_homogeneous(h0, config.gamma, config.T)
    final = states[-1]
    out = _out_dir(args, config)
    write_homogeneous_csv(os.path.join(out, 'homogeneous.csv'), states)
    write_report(os.path.join(out, 'homogeneous.json'), {
        'initial': [h0.f1, h0.f_minus1],
        'final': [final.f1, final.f_minus1],
        'total_drift': max(abs(s.total - h0.total) for s in states),
    }, config)
    logger.info(f"Homogeneous state at t={final.t:g}: ({final.f1:.6g}, {final.f_minus1:.6g})")
    return EXIT_OK


def cmd_layer(args, config):
    grid = config.grid()
    F = synthesize_initial(config.initial_data, grid)
    k = Orientation(config.k)
    rho0 = F.component(k)
    h0 = F.component(k.opposite())
    certificate = layer_certificate(rho0, h0, config.gamma)
    profile = initial_layer_solve(rho0, h0, config.gamma, tau_end=config.tau_end)

    envelope = h0[None, :] * np.exp(-certificate.delta * profile.taus)[:, None]
    excess = float(np.max(profile.values - envelope - 1e-12))
    decay = None
    if certificate.pointwise_separation:
        decay = layer_derivative_decay(profile, config.initial_data.derivative_sup())

    out = _out_dir(args, config)
    write_layer_csv(os.path.join(out, 'layer.csv'), profile, grid)
    passed = certificate.satisfiable and excess <= 0
    write_report(os.path.join(out, 'layer.json'), {
        'certificate': certificate,
        'envelope_excess': excess,
        'derivative_decay': decay,
        'pass': passed,
    }, config)
    if not passed:
        raise AcceptanceError(f"layer exceeds its certified envelope by {excess:.3e}")
    return EXIT_OK


def cmd_limit_check(args, config):
    grid = config.grid()
    F = synthesize_initial(config.initial_data, grid)
    out = _out_dir(args, config)
    if config.experiment != 'aligned_hyperbolic' and config.gamma > 1:
        # diffusive limit with gamma > 1 is backward diffusion
        regime = DiffusionRegime.PARABOLIC_ZEROTH if config.experiment == 'diffusive_parabolic' else DiffusionRegime.NS_HYPERBOLIC
        growth = backward_diffusion_demo(
            MacroField(F.total()), config.gamma, config.epsilon, regime, config.T, grid,
            unstable_demo=args.unstable_demo,
        )
        write_report(os.path.join(out, 'backward_diffusion.json'), {
            'coefficient': growth.coefficient,
            'wavenumbers': growth.wavenumbers,
            'amplification': growth.factors,
        }, config)
        return EXIT_OK

    start = time.perf_counter()
    error, cells = limit_check(
        config.experiment, F, config.gamma, config.epsilon, config.T, k=config.k, n_cells=config.n_cells,
        cells_per_epsilon=config.cells_per_epsilon, max_cells=config.max_cells, rel_change=config.rel_change,
    )
    logger.info(f"Limit check finished in {_elapsed(start)}: error {error:.4e} on {cells} cells")
    write_report(os.path.join(out, 'limit_check.json'), {
        'experiment': config.experiment,
        'epsilon': config.epsilon,
        'error': error,
        'error_over_epsilon': error / config.epsilon,
        'n_cells': cells,
    }, config)
    return EXIT_OK


def cmd_sweep(args, config):
    grid = config.grid()
    F = synthesize_initial(config.initial_data, grid)
    start = time.perf_counter()
    series = epsilon_sweep(
        config.experiment, F, config.gamma, config.epsilons, config.T, k=config.k, n_cells=config.n_cells,
        cells_per_epsilon=config.cells_per_epsilon, max_cells=config.max_cells, rel_change=config.rel_change,
        jobs=args.jobs,
    )
    logger.info(f"Sweep finished in {_elapsed(start)}")
    report = series.to_dict()
    report['pass'] = report.pop('passed')
    write_report(os.path.join(_out_dir(args, config), 'sweep.json'), report, config)
    if not series.passed:
        raise AcceptanceError(f"{config.experiment} sweep failed: errors {list(series.errors)}, order {series.fitted_order}")
    return EXIT_OK


def cmd_micro(args, config):
    F = synthesize_initial(config.initial_data, Grid(config.reference_cells))
    start = time.perf_counter()
    series = micro_refinement(F, config.gamma, config.micro_cells, config.T, config.reference_cells)
    logger.info(f"Micro refinement finished in {_elapsed(start)}")
    report = series.to_dict()
    report['pass'] = report.pop('passed')
    write_report(os.path.join(_out_dir(args, config), 'micro.json'), report, config)
    if not series.passed:
        raise AcceptanceError(f"micro scheme order {series.fitted_order:.3f} below 0.8")
    return EXIT_OK


def cmd_selftest(args, config):
    start = time.perf_counter()
    results = run_selftest(quick=args.quick)
    for result in results:
        status = 'PASS' if result.passed else 'FAIL'
        print(f"{status:4}  {result.name:<28} {result.seconds:8.2f}s  {result.detail}")
    failed = [r.name for r in results if not r.passed]
    logger.info(f"Selftest finished in {_elapsed(start)}; {len(results) - len(failed)}/{len(results)} passed")
    write_report(os.path.join(_out_dir(args, config), 'selftest.json'), {
        'checks': results,
        'pass': not failed,
    }, config)
    if failed:
        raise AcceptanceError(f"failed checks: {', '.join(failed)}")
    return EXIT_OK


COMMANDS = {
    'simulate': (cmd_simulate, 'Run one kinetic simulation'),
    'homogeneous': (cmd_homogeneous, 'Integrate the space-homogeneous system'),
    'layer': (cmd_layer, 'Compute the initial-layer profile and its certificate'),
    'limit-check': (cmd_limit_check, 'Compare one kinetic run with its macroscopic limit'),
    'sweep': (cmd_sweep, 'Run an epsilon ladder and fit the convergence order'),
    'micro': (cmd_micro, 'Refinement study of the discrete jump scheme'),
    'selftest': (cmd_selftest, 'Run the acceptance experiments'),
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument('--config', help='JSON run configuration')
    common.add_argument('--out', help='Output directory (defaults to output_dir of the config)')
    common.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                        help='Patch a configuration key; dotted keys reach nested tables')
    common.add_argument('--jobs', type=int, default=1, help='Concurrent sweep points')
    common.add_argument('--unstable-demo', action='store_true',
                        help='Allow the backward diffusion demo for gamma > 1')
    common.add_argument('--verbose', action='store_true', help='Debug logging')

    parser = _Parser(description='Alignment kinetics solver and verification harness')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        if name == 'selftest':
            sub.add_argument('--quick', action='store_true', help='Skip the epsilon-ladder sweeps')
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error('--jobs must be at least 1')

    try:
        overrides = list(args.override)
        if args.command == 'selftest' and args.config is None:
            # the selftest carries its own data; gamma only satisfies validation
            overrides = ['gamma=2'] + overrides
        config = load_config(args.config, overrides)
    except ConfigError as e:
        logging.basicConfig(level=logging.INFO)
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    out = args.out or config.output_dir
    setup_logger(os.environ.get('LOG_PATH') or os.path.join(out, 'logs'),
                 level=logging.DEBUG if args.verbose else logging.INFO)

    handler = COMMANDS[args.command][0]
    try:
        return handler(args, config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except PreconditionError as e:
        logger.error(f"Precondition failed: {e}", exc_info=True)
        return EXIT_PRECONDITION
    except AcceptanceError as e:
        logger.error(f"Acceptance check failed: {e}")
        return EXIT_ACCEPTANCE


if __name__ == '__main__':
    sys.exit(main())
