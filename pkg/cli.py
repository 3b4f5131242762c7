"""
Command-line front end.

    python cli.py certify --family poly --region -0.3 0.3
    python cli.py robust --m 5 --seed 7 --steps 200
    python cli.py fig3 --seed 42 --out output

Every subcommand prints a JSON summary on stdout and writes its data files
under --out (default $FPLNN_OUT or ./output). Exit status: 0 on success, 1 when
a verification fails, 2 on usage errors.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from caselib import build_coupled_network, case_study_spec, constant_residual, enumerate_fixed_points, reduced_map
from certify import RegionBox, certify_contraction_scalar, certify_contraction_vector
from config import (DEFAULT_MAX_ITER, DEFAULT_STEPS, DEFAULT_TOL, FIG3_SEED, FIG_M, LOG_FORMAT,
                    LOG_LEVEL, OUTPUT_DIR, Experiment, ExperimentConfig, Family, default_grid)
from errors import DimensionMismatchError, FixedPointError, HypothesisError
from export import dumps, write_json, write_rows_csv, write_trace_csv
from figures import FIGURES
from iterate import banach_ledger, iterate_to_fixed_point, reference_fixed_point
from oracle import grid_fixed_points, quadratic_fixed_point_property, scan_fixed_points_1d, textbook_examples_check
from robust import NoiseModel, perturbed_iterate, verify_robust

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
DEFAULT_X0 = {Family.POLYNOMIAL: 0.25, Family.EXPONENTIAL: -0.08}
ROBUST_X0 = {Family.POLYNOMIAL: 0.2, Family.EXPONENTIAL: -0.05}
SCAN_INTERVAL = {Family.POLYNOMIAL: (-2.0, 2.0), Family.EXPONENTIAL: (-1.5, 0.5)}
ORACLE_BOX = {Family.POLYNOMIAL: (-0.5, 1.6), Family.EXPONENTIAL: (-1.2, 0.3)}
ORACLE_GRID = {1: 10001, 2: 300, 3: 60}
ORACLE_TOL = 0.05


# ====== Helpers ======
def _map_for(config: ExperimentConfig):
    """Reduced map for d=1, coupled network otherwise"""
    if config.d == 1:
        return reduced_map(config.family).fn
    return build_coupled_network(config.family, config.d, config.m)


def _start(values: Optional[Sequence[float]], d: int, default: float) -> np.ndarray:
    if not values:
        return np.full(d, default)
    if len(values) == 1:
        return np.full(d, float(values[0]))
    if len(values) != d:
        raise DimensionMismatchError(f"--x0 has {len(values)} values, dimension is {d}")
    return np.asarray(values, dtype=np.float64)


def certified_box_for(family, x0: np.ndarray) -> Optional[RegionBox]:
    """Product of the certified intervals containing each coordinate of x0, if any"""
    regions = reduced_map(family).regions
    picked = []
    for value in x0:
        match = [r for r in regions if r.lower <= value <= r.upper]
        if not match:
            return None
        picked.append(match[0].box)
    return RegionBox.product(picked)


def _certify(fmap, box: RegionBox, grid: Optional[int]):
    n = grid or default_grid(box.d)
    if box.d == 1 and not hasattr(fmap, 'W'):
        return certify_contraction_scalar(fmap, box, n)
    return certify_contraction_vector(fmap, box, n)


# ====== Subcommands ======
def run_certify(config: ExperimentConfig, region: Optional[Tuple[float, float]] = None) -> Tuple[dict, bool]:
    fmap = _map_for(config)
    if region is None:
        first = reduced_map(config.family).regions[0]
        region = (first.lower, first.upper)
    box = RegionBox.cube(region[0], region[1], config.d)
    cert = _certify(fmap, box, config.grid)
    write_json(config.output_path('', 'json'), cert)
    return {'family': config.family, 'd': config.d, 'certificate': cert}, cert.contractive


def run_iterate(config: ExperimentConfig, x0: Optional[Sequence[float]] = None) -> Tuple[dict, bool]:
    fmap = _map_for(config)
    start = _start(x0, config.d, DEFAULT_X0[config.family])
    trace = iterate_to_fixed_point(fmap, start, config.tol, config.max_iter)
    payload = {'family': config.family, 'd': config.d, 'x0': start, 'converged': trace.converged,
               'T': trace.T, 'final': trace.final, 'ledger': None}
    ledger = None
    box = certified_box_for(config.family, start)
    if box is not None and trace.converged:
        cert = _certify(fmap, box, config.grid)
        if cert.contractive:
            p = reference_fixed_point(fmap, trace.final)
            ledger = banach_ledger(trace, cert.k_hat, p, p_source="iteration", certificate=cert)
            payload['ledger'] = {'K': cert.k_hat, 'p': p, 'ok': ledger.ok, 'violations': ledger.to_dict()['violations']}
    write_trace_csv(config.output_path('', 'csv'), trace, ledger)
    write_json(config.output_path('', 'json'), {'summary': payload, 'trace': trace})
    return payload, trace.converged and (ledger is None or ledger.ok)


def run_robust(config: ExperimentConfig, x0: Optional[Sequence[float]] = None) -> Tuple[dict, bool]:
    fmap = _map_for(config)
    start = _start(x0, config.d, ROBUST_X0[config.family])
    box = certified_box_for(config.family, start)
    if box is None:
        raise HypothesisError(f"x0={start.tolist()} is not inside a certified region of the {config.family.value} map")
    cert = _certify(fmap, box, config.grid)
    p = reference_fixed_point(fmap, box.center)
    trace = perturbed_iterate(fmap, start, NoiseModel(config.m, config.seed), config.steps)
    report = verify_robust(trace, p, cert.k_hat, config.m)
    write_trace_csv(config.output_path('', 'csv'), trace)
    write_json(config.output_path('', 'json'), {'report': report, 'certificate': cert, 'trace': trace})
    payload = {'family': config.family, 'd': config.d, 'm': config.m, 'seed': config.seed, 'K': cert.k_hat,
               'p': p, 'ok': report.ok, 'final_error': report.final_error,
               'final_within_bound': report.final_within_bound, 'violations': report.violations}
    return payload, report.ok and report.final_within_bound


def run_construct(config: ExperimentConfig) -> Tuple[dict, bool]:
    spec = case_study_spec(config.family, config.d, config.m)
    net = spec.network()
    payload = {'spec': spec, 'constant_residual': constant_residual(config.family),
               'network': {'name': net.name, 'W': net.W, 'b': net.b}}
    write_json(config.output_path('', 'json'), payload)
    return payload, True


def run_enumerate(config: ExperimentConfig, validate: bool = False) -> Tuple[dict, bool]:
    spec = case_study_spec(config.family, config.d, config.m)
    net = spec.network()
    points = enumerate_fixed_points(spec)
    rows = [[i, *p, float(np.max(np.abs(net(p) - p)))] for i, p in enumerate(points)]
    header = ['index'] + [f'x{i + 1}' for i in range(config.d)] + ['residual']
    write_rows_csv(config.output_path('', 'csv'), header, rows)
    payload = {'spec': spec, 'count': len(points), 'fixed_points': points, 'validated': None}
    ok = len(points) == 2 ** config.d
    if validate:
        box = RegionBox.cube(*ORACLE_BOX[config.family], config.d)
        records = grid_fixed_points(net, box, config.grid or ORACLE_GRID.get(config.d, 2), ORACLE_TOL)
        matched = [any(np.max(np.abs(r.location - p)) <= 1e-2 for r in records) for p in points]
        payload['validated'] = {'clusters': records, 'matched': matched}
        ok = ok and all(matched) and len(records) == len(points)
    write_json(config.output_path('', 'json'), payload)
    return payload, ok


def run_oracle(config: ExperimentConfig, mode: str = 'scan', region: Optional[Tuple[float, float]] = None,
               coefficients: Optional[Sequence[float]] = None) -> Tuple[dict, bool]:
    ok = True
    if mode == 'scan':
        interval = RegionBox.interval(*(region or SCAN_INTERVAL[config.family]))
        records = scan_fixed_points_1d(reduced_map(config.family).fn, interval, config.grid or 10001)
        payload = {'mode': mode, 'family': config.family, 'interval': interval, 'fixed_points': records}
    elif mode == 'grid':
        box = RegionBox.cube(*(region or ORACLE_BOX[config.family]), config.d)
        fmap = _map_for(config)
        records = grid_fixed_points(fmap, box, config.grid or ORACLE_GRID.get(config.d, 30), ORACLE_TOL)
        payload = {'mode': mode, 'family': config.family, 'd': config.d, 'box': box, 'fixed_points': records}
    elif mode == 'quadratic':
        if not coefficients or len(coefficients) != 3:
            raise HypothesisError("quadratic mode needs --abc A B C")
        report = quadratic_fixed_point_property(*coefficients)
        payload, ok = {'mode': mode, 'report': report}, report.holds
    elif mode == 'textbook':
        report = textbook_examples_check()
        payload, ok = {'mode': mode, 'report': report}, report.ok
    else:
        raise HypothesisError(f"unknown oracle mode {mode!r}")
    write_json(config.output_path(mode, 'json'), payload)
    return payload, ok


def run_figure(config: ExperimentConfig) -> Tuple[dict, bool]:
    result = FIGURES[config.experiment](config)
    return result.to_dict(), result.ok


# ====== Argument parsing ======
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--family', default='poly', choices=['poly', 'exp'], help="activation family")
    common.add_argument('--dim', type=int, default=1, help="dimension d")
    common.add_argument('--m', type=float, default=FIG_M, help="coupling / noise parameter")
    common.add_argument('--seed', type=int, default=FIG3_SEED, help="noise seed")
    common.add_argument('--tol', type=float, default=DEFAULT_TOL, help="iteration tolerance")
    common.add_argument('--max-iter', type=int, default=DEFAULT_MAX_ITER, help="iteration cap")
    common.add_argument('--steps', type=int, default=DEFAULT_STEPS, help="perturbed iteration steps")
    common.add_argument('--grid', type=int, default=None, help="grid points per axis")
    common.add_argument('--out', type=str, default=OUTPUT_DIR, help="output directory (env FPLNN_OUT)")

    parser = argparse.ArgumentParser(prog='fplnn', description="fixed-point toolkit for looped neural networks")
    sub = parser.add_subparsers(dest='command', metavar='command')

    p = sub.add_parser('certify', parents=[common], help="contraction certificate on a box")
    p.add_argument('--region', type=float, nargs=2, metavar=('LO', 'HI'), default=None)
    p = sub.add_parser('iterate', parents=[common], help="noiseless iteration with the bound ledger")
    p.add_argument('--x0', type=float, nargs='+', default=None)
    p = sub.add_parser('robust', parents=[common], help="perturbed iteration and robust bounds")
    p.add_argument('--x0', type=float, nargs='+', default=None)
    sub.add_parser('construct', parents=[common], help="case-study network parameters")
    p = sub.add_parser('enumerate', parents=[common], help="2^d fixed points of the coupled network")
    p.add_argument('--validate', action='store_true', help="cross-check with the grid oracle")
    p = sub.add_parser('oracle', parents=[common], help="brute-force fixed-point search")
    p.add_argument('--mode', choices=['scan', 'grid', 'quadratic', 'textbook'], default='scan')
    p.add_argument('--region', type=float, nargs=2, metavar=('LO', 'HI'), default=None)
    p.add_argument('--abc', type=float, nargs=3, metavar=('A', 'B', 'C'), default=None)
    for name in ('fig1', 'fig2', 'fig3'):
        sub.add_parser(name, parents=[common], help=f"reproduce {name}")
    return parser


def config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=Experiment(args.command),
        family=Family.parse(args.family),
        d=args.dim,
        m=args.m,
        seed=args.seed,
        tol=args.tol,
        max_iter=args.max_iter,
        output_dir=Path(args.out),
        steps=args.steps,
        grid=args.grid,
    )


def dispatch(config: ExperimentConfig, args) -> Tuple[dict, bool]:
    experiment = config.experiment
    if experiment is Experiment.CERTIFY:
        return run_certify(config, args.region)
    if experiment is Experiment.ITERATE:
        return run_iterate(config, args.x0)
    if experiment is Experiment.ROBUST:
        return run_robust(config, args.x0)
    if experiment is Experiment.CONSTRUCT:
        return run_construct(config)
    if experiment is Experiment.ENUMERATE:
        return run_enumerate(config, args.validate)
    if experiment is Experiment.ORACLE:
        return run_oracle(config, args.mode, args.region, args.abc)
    return run_figure(config)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT, stream=sys.stderr)
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        config = config_from_args(args)
        payload, ok = dispatch(config, args)
    except (HypothesisError, DimensionMismatchError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except (FixedPointError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILED

    print(dumps(payload))
    if not ok:
        logger.warning(f"{args.command}: verification failed")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
