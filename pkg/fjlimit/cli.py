from __future__ import annotations

import argparse
import logging
import sys

from dataclasses import asdict
from time import perf_counter
from typing import Any, Callable, NoReturn, Sequence

import numpy as np

from ._metadata import __version__
from .config import ExperimentConfig
from .distributions import WeibullFactorLaw
from .enum import BoundedKind, FiniteSupportMode, InterarrivalKind, LimitLawKind
from .exceptions import BudgetError, ConvergenceError, FJLimitError, InvalidArgumentError, NumericError
from .forkjoin import TrajectoryBatch, simulate_auxiliary, simulate_finite_support, simulate_max_wait
from .forkjoin import simulate_steady_state
from .limit import GridSpec, LimitLaw, holder_profile, simulate_aux_limit, simulate_drifted_sup
from .limit import simulate_extremal_field, simulate_job_size_sup, simulate_profile_comparison
from .output import read_selection, write_samples, write_table, write_trajectories
from .scaling import scaling_table
from .stats import EmpiricalDistribution, ks_against, two_sample_ks

__all__ = [
    'build_parser',
    'run_command',
    'main'
]

logger = logging.getLogger(__name__)

_FORMAT = '%(levelname)s %(name)s: %(message)s'


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)

        raise InvalidArgumentError(message, self.prog)


def _list_of(kind: Callable[[str], Any]) -> Callable[[str], list[Any]]:
    def parse(text: str) -> list[Any]:
        try:
            return [kind(v) for v in text.split(',') if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f'expected a comma separated list, got "{text}"') from None

    return parse


def _base_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', dest='log_level', action='store_const', const=logging.DEBUG)
    verbosity.add_argument('-q', '--quiet', dest='log_level', action='store_const', const=logging.WARNING)

    parser.add_argument('--config', help='dotted-key TOML config file')
    parser.add_argument('--dump-config', metavar='PATH', help='write the merged config and exit')
    parser.add_argument('--seed', dest='run__seed', type=int)
    parser.add_argument('--reps', dest='run__replications', type=int)
    parser.add_argument('--budget', dest='run__budget', type=int, help='server-job update cap')
    parser.add_argument('--out', dest='output__path', help='output path, - for stdout')
    parser.add_argument('--format', dest='output__format', choices=('csv', 'json'))

    return parser


def _model_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)

    parser.add_argument('--alpha', dest='model__alpha', type=float, help='Weibull shape, 0 < alpha < 1')
    parser.add_argument('--q', dest='model__q', type=float, help='Weibull rate')
    parser.add_argument('--L', dest='model__L', help='const:<c>, log or expsqrtlog')
    parser.add_argument('--interarrival', dest='model__interarrival', choices=('exp', 'det'))
    parser.add_argument('--n', dest='n_list', type=_list_of(int), help='servers, comma separated for tables')

    return parser


def _law_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)

    parser.add_argument('--beta', dest='model__beta', type=float, help='job-size tail index')
    parser.add_argument('--mu', dest='model__mu', type=float, help='drift')

    return parser


def _run_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)

    parser.add_argument('--horizon', dest='run__horizon', type=float, help='scaled horizon T')
    parser.add_argument('--grid-step', dest='run__grid_step', type=float, help='recording grid step')
    parser.add_argument('--step', dest='run__step', type=float, help='limit-process cell width h')
    parser.add_argument('--samples', dest='run__samples', type=int)
    parser.add_argument('--jobs', dest='run__jobs', type=int, help='k for finite-support runs')

    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='fjlimit', description='Fork-join maximum waiting times: simulation and limit laws')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    base, model, law, run = _base_flags(), _model_flags(), _law_flags(), _run_flags()

    sub.add_parser('scaling', parents=[base, model, law], help='b_N and c_N table')
    sub.add_parser('simulate-fj', parents=[base, model, law, run], help='scaled max waiting time paths')
    sub.add_parser('simulate-aux', parents=[base, model, law, run], help='auxiliary process paths')
    sub.add_parser('simulate-jobsize', parents=[base, model, law, run], help='job-size-only approximation paths')

    steady = sub.add_parser('steady-state', parents=[base, model, law, run], help='long-run samples')
    steady.add_argument('--warmup', type=int, help='discarded jobs, default 10 c_N')
    steady.add_argument('--gap', type=int, help='jobs between samples, default c_N')
    steady.add_argument('--no-enforce-warmup', dest='enforce_warmup', action='store_false')

    limit = sub.add_parser('simulate-limit', parents=[base, law, run], help='limit process paths')
    limit.add_argument('--process', choices=('drifted', 'aux', 'field'), default='drifted')

    law_table = sub.add_parser('limit-law', parents=[base, law], help='closed-form CDF table')
    law_table.add_argument('--kind', default='steady', help='frechet, transient or steady')
    law_table.add_argument('--t', type=float, default=1.0, help='time of the transient or marginal law')
    law_table.add_argument('--x', type=_list_of(float), required=True, help='comma separated points')

    profile = sub.add_parser('holder-profile', parents=[base], help='constrained profile value')
    profile.add_argument('--alpha', type=float, required=True)
    profile.add_argument('--b', type=_list_of(float), required=True, help='comma separated job sizes')

    compare = sub.add_parser('compare', parents=[base, law], help='KS report for one or two sample files')
    compare.add_argument('files', nargs='+', metavar='FILE')
    compare.add_argument('--law', help='frechet, transient or steady, for a single file')
    compare.add_argument('--t', type=float, help='grid time to read and time of the law')
    compare.add_argument('--series', help='series to read from sample files')

    finite = sub.add_parser('finite-support', parents=[base, model, law, run], help='bounded A vs A = b')
    finite.add_argument('--bounded', default='uniform', choices=('uniform', 'point'))
    finite.add_argument('--endpoint', type=float, default=1.0, help='right endpoint b')
    finite.add_argument('--lower', type=float, default=0.0)
    finite.add_argument('--mode', default='fixed', choices=('fixed', 'sup'))

    versus = sub.add_parser('profile-compare', parents=[base, law, run], help='scaled l-job maxima vs the profile')
    versus.add_argument('--alpha', type=float, required=True, help='Weibull shape, any alpha > 0')
    versus.add_argument('--q', type=float, default=1.0, help='Weibull rate')
    versus.add_argument('--n', dest='n_list', type=_list_of(int), help='servers')

    return parser


def _merge(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig() if args.config is None else ExperimentConfig.load(args.config)

    flags = {k: v for k, v in vars(args).items() if '__' in k}

    if getattr(args, 'n_list', None):
        flags['model__n_servers'] = args.n_list[0]

    return config.override(**flags)


def _scaling(args: argparse.Namespace, config: ExperimentConfig) -> None:
    n_values = args.n_list or [config.model.n_servers]
    table = scaling_table(n_values, config.model.weibull(), config.model.regvar())

    write_table(
        [
            {
                'N': s.n_servers, 'b_N': s.b_n, 'c_N': s.c_n,
                'residual': s.residual, 'iterations': s.iterations
            } for s in table
        ],
        config.output.path, config.output.format, {'model': asdict(config.model)}
    )


def _single_n(args: argparse.Namespace) -> None:
    if args.n_list and len(args.n_list) > 1:
        raise InvalidArgumentError('This command takes a single --n!', args.command, args.n_list)


def _simulate(args: argparse.Namespace, config: ExperimentConfig) -> None:
    _single_n(args)

    run = config.run
    simulate = _PATH_SIMULATORS[args.command]

    batch = simulate(
        config.model.build(), run.horizon, run.grid_step, run.replications, run.seed, budget=run.budget
    )

    write_trajectories(batch, config.output.path, config.output.format)


_PATH_SIMULATORS: dict[str, Callable[..., TrajectoryBatch]] = {
    'simulate-fj': simulate_max_wait,
    'simulate-aux': simulate_auxiliary,
    'simulate-jobsize': simulate_job_size_sup
}


def _steady_state(args: argparse.Namespace, config: ExperimentConfig) -> None:
    _single_n(args)

    params, run = config.model.build(), config.run

    emp = simulate_steady_state(
        params, args.warmup, run.samples, args.gap, run.seed,
        budget=run.budget, enforce_warmup=args.enforce_warmup
    )

    write_samples(
        {'steady_state': emp.sorted_samples}, config.output.path, config.output.format,
        {'params': params.as_dict(), 'seed': run.seed, 'effective_n': emp.effective_n}
    )


def _simulate_limit(args: argparse.Namespace, config: ExperimentConfig) -> None:
    run, beta, mu = config.run, config.model.beta, config.model.mu

    grid = GridSpec(run.horizon, run.step, run.grid_step)

    match args.process:
        case 'drifted':
            batch = simulate_drifted_sup(grid, beta, mu, run.replications, run.seed, budget=run.budget)
        case 'aux':
            batch = simulate_aux_limit(grid, beta, mu, run.replications, run.seed, budget=run.budget)
        case _:
            batch = simulate_extremal_field(grid, beta, run.replications, run.seed, budget=run.budget)

    write_trajectories(batch, config.output.path, config.output.format)


def _limit_law(args: argparse.Namespace, config: ExperimentConfig) -> None:
    law = LimitLaw(LimitLawKind.from_param(args.kind), config.model.beta, config.model.mu, args.t)

    write_table(
        [{'x': x, 'cdf': law.cdf(x), 'sf': law.sf(x)} for x in args.x],
        config.output.path, config.output.format,
        {'kind': law.kind.name.lower(), 'beta': law.beta, 'mu': law.mu, 't': law.t}
    )


def _holder_profile(args: argparse.Namespace, config: ExperimentConfig) -> None:
    write_table(
        [{'alpha': args.alpha, 'profile': holder_profile(args.b, args.alpha)}],
        config.output.path, config.output.format, {'b': args.b}
    )


def _compare(args: argparse.Namespace, config: ExperimentConfig) -> None:
    selections = [read_selection(f, args.t, args.series) for f in args.files]
    samples = [EmpiricalDistribution.from_samples(s.values) for s in selections]
    law_t = None

    match samples, args.law:
        case [first, second], None:
            report = two_sample_ks(first, second)
        case [first], str(kind):
            # grid time read from the file, else --t
            law_t = next((t for t in (selections[0].t, args.t) if t is not None), 1.0)
            law = LimitLaw(LimitLawKind.from_param(kind), config.model.beta, config.model.mu, law_t)
            report = ks_against(first, law)
        case _:
            raise InvalidArgumentError('compare takes two files, or one file and --law!', args.command)

    write_table(
        [report.as_dict()], config.output.path, 'json',
        {'files': args.files, 'law': args.law, 't': law_t, 'selected_t': [s.t for s in selections]}
    )


def _finite_support(args: argparse.Namespace, config: ExperimentConfig) -> None:
    _single_n(args)

    model, run = config.model, config.run

    bounded = BoundedKind.from_param(args.bounded)(args.endpoint, args.lower)
    regvar = model.regvar()
    interarrival = InterarrivalKind.from_param(model.interarrival)(bounded.mean * regvar.mean + model.mu)

    comparison = simulate_finite_support(
        bounded, regvar, interarrival, model.n_servers, run.jobs, run.replications, run.seed,
        FiniteSupportMode.from_param(args.mode), budget=run.budget
    )

    write_samples(
        {'max_system': comparison.max_system.sorted_samples, 'reference': comparison.reference.sorted_samples},
        config.output.path, config.output.format,
        {'ks': comparison.ks().as_dict(), 'seed': run.seed, 'jobs': run.jobs, 'mode': args.mode}
    )


def _profile_compare(args: argparse.Namespace, config: ExperimentConfig) -> None:
    _single_n(args)

    model, run = config.model, config.run

    server = WeibullFactorLaw(args.alpha, args.q)
    regvar = model.regvar()
    interarrival = InterarrivalKind.from_param(model.interarrival)(server.mean * regvar.mean + model.mu)

    comparison = simulate_profile_comparison(
        server, regvar, interarrival, model.n_servers, run.jobs, run.replications, run.seed, budget=run.budget
    )

    write_samples(
        {'scaled_max': np.sort(comparison.scaled_max), 'profile': np.sort(comparison.profile)},
        config.output.path, config.output.format,
        {
            'ks': comparison.ks().as_dict(), 'seed': run.seed, 'jobs': run.jobs, 'alpha': args.alpha,
            'median_relative_gap': float(np.median(comparison.relative_gap()))
        }
    )


_COMMANDS: dict[str, Callable[[argparse.Namespace, ExperimentConfig], None]] = {
    'scaling': _scaling,
    'simulate-fj': _simulate,
    'simulate-aux': _simulate,
    'simulate-jobsize': _simulate,
    'steady-state': _steady_state,
    'simulate-limit': _simulate_limit,
    'limit-law': _limit_law,
    'holder-profile': _holder_profile,
    'compare': _compare,
    'finite-support': _finite_support,
    'profile-compare': _profile_compare
}


def _configure_logging(level: int) -> None:
    root = logging.getLogger('fjlimit')

    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))

    root.addHandler(handler)
    root.setLevel(level)


def run_command(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand.

    :return:    0 on success, 1 on invalid arguments or config, 2 on budget, convergence or numeric errors.
    """

    _configure_logging(logging.INFO)

    start = perf_counter()

    try:
        args = build_parser().parse_args(argv)

        _configure_logging(args.log_level or logging.INFO)

        config = _merge(args)

        if args.dump_config:
            config.dump(args.dump_config)
            logger.info('config written to %s', args.dump_config)
            return 0

        _COMMANDS[args.command](args, config)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    except InvalidArgumentError as e:
        logger.error('%s', e)
        return 1
    except (BudgetError, ConvergenceError, NumericError) as e:
        logger.error('%s', e)
        return 2
    except FJLimitError as e:
        logger.error('%s', e)
        return 1

    logger.info('seed=%d runtime=%.3fs out=%s', config.run.seed, perf_counter() - start, config.output.path)

    return 0


def main() -> NoReturn:
    sys.exit(run_command())
