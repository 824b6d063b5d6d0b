"""tdlab - true online TD(lambda) experiment lab

Generate random environments, run deterministic parameter sweeps, check the
exact equivalences and export the data behind the comparison figures.

"""
import argparse
import hashlib
import logging
import os
import sys
from dataclasses import fields

import tdlab
from tdlab.base.encoder import manifest_line
from tdlab.core import ConfigurationError
from tdlab.decoder import ConfigDecoder, DecodeError, EnvironmentDecoder
from tdlab.encoder import (Artifact, EncodeError, EnvironmentEncoder,
                           SweepCsvEncoder, TableEncoder)
from tdlab.envs import Mrp, REPRESENTATIONS, generate_mdp, generate_mrp
from tdlab.figures import FIGURES, FigureConfig, build_figure
from tdlab.grammar import parse_grid, parse_variants
from tdlab.harness import (DEFAULT_GAMMA, SweepConfig, default_alphas,
                           default_lambdas, run_sweep)
from tdlab.oracle import WEIGHTINGS, HorizonError
from tdlab.verify import SUITES, VerifyConfig, run_verify

logger = logging.getLogger('tdlab')

SEED_VARIABLE = 'TDLAB_SEED'
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

CHOICES = {
    'representation': {kind: kind for kind in REPRESENTATIONS
                       if kind != 'tile-coding'},
    'weighting': {weighting: weighting for weighting in WEIGHTINGS},
    'suite': {suite: suite for suite in SUITES},
    'figure': {str(figure): figure for figure in FIGURES},
}


def action(kind):
    """Return a ChoiceAction(argparse.Action) for ``kind``."""

    class ChoiceAction(argparse.Action):  # pylint: disable=R0903
        """Map argument string values to a value in registry ``kind``.

        Set the appropriate ``choices`` attribute.

        """
        def __init__(self, *args, **kwargs):
            kwargs['choices'] = CHOICES[kind].keys()
            super(ChoiceAction, self).__init__(*args, **kwargs)

        def __call__(self, parser, namespace, value, option_string=None):
            """Coerce argument value to the registered ``kind`` value."""
            setattr(namespace, self.dest, CHOICES[kind][value])

    return ChoiceAction


def checksum(text):
    """Hex SHA-256 of ``text``."""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def manifest(command, parameters):
    """Everything needed to reproduce an artifact."""
    return {'command': command, 'parameters': parameters,
            'tool_version': tdlab.__version__}


def environment_seed():
    """Seed from $TDLAB_SEED, or None when it is unset."""
    seed = os.environ.get(SEED_VARIABLE)
    if seed is None:
        return None
    try:
        return int(seed)
    except ValueError:
        raise ConfigurationError('{} must be an integer, not {!r}'
                                 .format(SEED_VARIABLE, seed))


def file_parameters(args):
    """Parameters of the ``--config`` file, or an empty mapping."""
    if args.config is None:
        return {}
    document = ConfigDecoder().load(args.config)
    args.config.close()
    command = document.get('command')
    if command is not None and command != args.command:
        raise ConfigurationError('the config file was written by {!r}, not '
                                 '{!r}'.format(command, args.command))
    return document.get('parameters') or {}


def merge(cls, args, names):
    """Keyword arguments for ``cls``: flags over file values over defaults.

    ``names`` maps ``cls`` field names to argument names.

    """
    known = {field.name for field in fields(cls)}
    out = {key: tuple(value) if isinstance(value, list) else value
           for key, value in file_parameters(args).items() if key in known}
    for name, dest in names.items():
        value = getattr(args, dest, None)
        if value is not None:
            out[name] = value
    seed = environment_seed()
    if seed is not None and 'seed' in known:
        out['seed'] = seed
    return out


def write(args, text):
    """Write ``text`` to the ``--out`` stream."""
    args.out.write(text)
    args.out.flush()
    logger.info('wrote %d bytes (sha256 %s)', len(text), checksum(text))


def cmd_gen_mrp(args):
    """Write a random environment file and print its summary."""
    keys = ('k', 'b', 'sigma', 'gamma', 'seed', 'actions')
    parameters = {'sigma': 0.1, 'gamma': DEFAULT_GAMMA, 'seed': 0,
                  'actions': None}
    parameters.update((key, value) for key, value in
                      file_parameters(args).items() if key in keys)
    parameters.update((key, getattr(args, key)) for key in keys
                      if getattr(args, key) is not None)
    if environment_seed() is not None:
        parameters['seed'] = environment_seed()
    if parameters.get('k') is None or parameters.get('b') is None:
        raise ConfigurationError('gen-mrp needs --k and --b')
    if parameters['actions'] is None:
        env = generate_mrp(parameters['k'], parameters['b'],
                           parameters['sigma'], parameters['gamma'],
                           parameters['seed'])
    else:
        env = generate_mdp(parameters['k'], parameters['b'],
                           parameters['actions'], parameters['sigma'],
                           parameters['gamma'], parameters['seed'])
    text = EnvironmentEncoder().dumps(Artifact(env,
                                               manifest('gen-mrp',
                                                        parameters)))
    write(args, text)
    print('k={} b={} sigma={!r} sha256={}'.format(
        parameters['k'], parameters['b'], parameters['sigma'],
        checksum(text)), file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args):
    """Run a parameter sweep and write its CSV."""
    names = {'task': 'task', 'representation': 'representation',
             'variants': 'variants', 'alphas': 'alphas',
             'lambdas': 'lambdas', 'steps': 'steps', 'runs': 'runs',
             'seed': 'seed', 'weighting': 'weighting', 'gamma': 'gamma',
             'workers': 'workers'}
    kwargs = merge(SweepConfig, args, names)
    if args.full_grid:
        kwargs['alphas'] = default_alphas()
        kwargs['lambdas'] = default_lambdas()
    parameters = {}
    if args.env is not None:
        text = args.env.read()
        args.env.close()
        environment = EnvironmentDecoder().loads(text)
        if not isinstance(environment, Mrp):
            raise ConfigurationError('sweeps evaluate prediction on an '
                                     'MRP, not an MDP')
        kwargs['environment'] = environment
        parameters['environment_sha256'] = checksum(text)
    elif kwargs.get('task') == 'file':
        raise ConfigurationError('this sweep ran on an environment file; '
                                 'pass it again with --env')
    config = SweepConfig(**kwargs)
    parameters.update(config.parameters())
    result = run_sweep(config)
    write(args, SweepCsvEncoder().dumps(Artifact(
        result, manifest('sweep', parameters))))
    return EXIT_OK


def cmd_verify(args):
    """Run a check suite; exit 1 when any check fails."""
    names = {'suite': 'suite', 'trials': 'trials', 'seed': 'seed',
             'runs': 'runs', 'steps': 'steps', 'workers': 'workers',
             'alphas': 'alphas', 'lambdas': 'lambdas'}
    kwargs = merge(VerifyConfig, args, names)
    if args.full_grid:
        kwargs['alphas'] = default_alphas()
        kwargs['lambdas'] = default_lambdas()
    config = VerifyConfig(**kwargs)
    results = run_verify(config)
    lines = [str(result) for result in results]
    lines.extend(result.summary() for result in results)
    write(args, manifest_line(manifest('verify', config.parameters())) +
          '\n'.join(lines) + '\n')
    if all(result.passed for result in results):
        return EXIT_OK
    return EXIT_FAILED


def cmd_figures(args):
    """Write the data behind one figure as CSV."""
    names = {'figure': 'figure', 'seed': 'seed', 'runs': 'runs',
             'workers': 'workers', 'alphas': 'alphas', 'lambdas': 'lambdas'}
    kwargs = merge(FigureConfig, args, names)
    if 'figure' not in kwargs:
        raise ConfigurationError('figures needs --figure')
    config = FigureConfig(**kwargs)
    table = build_figure(config)
    write(args, TableEncoder().dumps(Artifact(
        table, manifest('figures', config.parameters()))))
    return EXIT_OK


def _common(parser):
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log progress (-vv for debugging output)')
    parser.add_argument('-c', '--config', type=argparse.FileType('r'),
                        help='configuration, manifest or artifact to replay')
    parser.add_argument('-o', '--out', type=argparse.FileType('w'),
                        default=sys.stdout, help='output file')
    parser.add_argument('--seed', type=int,
                        help='master seed (overridden by $TDLAB_SEED)')


def _workers(parser):
    parser.add_argument('--workers', type=int, help='worker processes')


def _grids(parser):
    parser.add_argument('--alphas', type=parse_grid,
                        help='step-size grid, e.g. 0.1,0.5 or log:-3:-1:0.2')
    parser.add_argument('--lambdas', type=parse_grid,
                        help='lambda grid, e.g. 0:1:0.1')
    parser.add_argument('--full-grid', '--paper-grid', action='store_true',
                        help='sweep the full grid of 30 step-sizes and 20 '
                        'lambdas')


def parse_arguments(argv):
    """Parse command line arguments and return a Namespace object."""
    parser = argparse.ArgumentParser(prog='tdlab', description=__doc__)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    gen = commands.add_parser('gen-mrp', help='generate a random MRP')
    _common(gen)
    gen.add_argument('--k', type=int, help='number of states')
    gen.add_argument('--b', type=int, help='branching factor')
    gen.add_argument('--sigma', type=float, help='reward noise')
    gen.add_argument('--gamma', type=float, help='discount factor')
    gen.add_argument('--actions', type=int,
                     help='generate an MDP with this many actions')
    gen.set_defaults(func=cmd_gen_mrp)

    sweep = commands.add_parser('sweep', help='run a parameter sweep')
    _common(sweep)
    _workers(sweep)
    _grids(sweep)
    sweep.add_argument('--task',
                       help='mrp(k,b,sigma), random-walk-10, one-state or '
                       'two-state')
    sweep.add_argument('--env', type=argparse.FileType('r'),
                       help='environment file written by gen-mrp')
    sweep.add_argument('--repr', dest='representation',
                       action=action('representation'),
                       help='feature representation')
    sweep.add_argument('--variants', type=parse_variants,
                       help='comma separated prediction variants')
    sweep.add_argument('--steps', type=int, help='time steps per run')
    sweep.add_argument('--runs', type=int, help='runs per cell')
    sweep.add_argument('--weighting', action=action('weighting'),
                       help='state weighting of the error')
    sweep.add_argument('--gamma', type=float,
                       help='discount factor of generated MRPs')
    sweep.set_defaults(func=cmd_sweep)

    verify = commands.add_parser('verify', help='run check suites')
    _common(verify)
    _workers(verify)
    _grids(verify)
    verify.add_argument('--suite', action=action('suite'),
                        help='suite to run')
    verify.add_argument('--trials', type=int,
                        help='randomized trials per check')
    verify.add_argument('--runs', type=int, help='runs per sweep cell')
    verify.add_argument('--steps', type=int, help='time steps per run')
    verify.set_defaults(func=cmd_verify)

    figures = commands.add_parser('figures', help='export figure data')
    _common(figures)
    _workers(figures)
    figures.add_argument('--alphas', type=parse_grid, help='step-size grid')
    figures.add_argument('--lambdas', type=parse_grid, help='lambda grid')
    figures.add_argument('--figure', action=action('figure'),
                         help='figure number')
    figures.add_argument('--runs', type=int, help='independent runs')
    figures.set_defaults(func=cmd_figures)

    return parser.parse_args(argv)


def main(argv=None):
    """Run one subcommand and exit with its status."""
    args = parse_arguments(argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO,
               logging.DEBUG)[min(args.verbose, 2)],
        format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    try:
        status = args.func(args)
    except (ConfigurationError, DecodeError, EncodeError,
            HorizonError) as error:
        print('tdlab: error: {}'.format(error), file=sys.stderr)
        status = EXIT_USAGE
    finally:
        if args.out is not sys.stdout:
            args.out.close()
    sys.exit(status)


if __name__ == '__main__':
    main(sys.argv[1:])
