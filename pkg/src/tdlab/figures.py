"""Data behind the comparison figures, as plain tables.

1. normalized RMS error per step on the random walk (offline and online
   lambda-return algorithms, accumulate TD(lambda));
2. end-of-episode RMS error against alpha on the one-state task;
3. asymptotic RMS error against lambda on the two-state task;
4. best normalized MSE per lambda on MRP (10, 3, 0.1) for every
   representation.

"""
import logging
from dataclasses import dataclass

import numpy as np

from .algos import make_learner, sample_trajectory, theta_history
from .core import ConfigurationError
from .envs import canonical_task
from .grammar import parse_grid
from .harness import (SweepConfig, best_per_lambda, converged_error,
                      default_lambdas, rms_error_curve, run_sweep)
from .oracle import (offline_lambda_return_history,
                     online_lambda_return_algorithm)
from .rng import Rng, mix64

logger = logging.getLogger(__name__)

FIGURES = (1, 2, 3, 4)
DEFAULT_RUNS = {1: 1, 2: 100, 3: 1, 4: 50}
FIG1_ALPHA = 0.2
FIG1_EPISODES = 3
FIG2_ALPHAS = '0.05:1.5:0.05'
FIG2_EPISODES = 10
FIG3_ALPHA = 0.01
FIG4_TASK = 'mrp(10,3,0.1)'
FIG4_REPRESENTATIONS = ('tabular', 'binary', 'random-normalized')


@dataclass(frozen=True)
class Table:
    """Named columns and rows of plain values."""

    columns: tuple
    rows: tuple

    def column(self, name):
        """Values of column ``name``."""
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


@dataclass(frozen=True)
class FigureConfig:
    """Which figure to build and how much work to spend on it."""

    figure: int
    seed: int = 0
    runs: int = None
    workers: int = 1
    alphas: tuple = None
    lambdas: tuple = None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ConfigurationError('unknown figure {!r} (choose from {})'
                                     .format(self.figure, FIGURES))
        if self.runs is None:
            object.__setattr__(self, 'runs', DEFAULT_RUNS[self.figure])
        if self.runs < 1:
            raise ConfigurationError('runs must be positive')

    def parameters(self):
        """Plain-data parameters for manifests."""
        return {'figure': self.figure, 'seed': self.seed, 'runs': self.runs,
                'alphas': None if self.alphas is None else list(self.alphas),
                'lambdas': (None if self.lambdas is None
                            else list(self.lambdas))}


def fig1(config):
    """Normalized RMS error after every step of three random-walk episodes."""
    mrp, representation = canonical_task('random-walk-10')
    trajectory = sample_trajectory(mrp, representation, Rng(config.seed),
                                   episodes=FIG1_EPISODES)
    theta_init = np.zeros(representation.n)
    histories = {
        'offline': offline_lambda_return_history(trajectory, FIG1_ALPHA, 1.0,
                                                 theta_init),
        'online': online_lambda_return_algorithm(trajectory, FIG1_ALPHA, 1.0,
                                                 theta_init).theta_history,
        'accumulate': theta_history(
            make_learner('accumulate', representation.n, FIG1_ALPHA, 1.0),
            trajectory),
    }
    curves = {name: rms_error_curve(history, mrp, representation,
                                    normalize=True)
              for name, history in histories.items()}
    episode = np.concatenate(([0], np.cumsum([step.terminal
                                              for step in trajectory])))
    rows = tuple((t, int(episode[max(t - 1, 0)]),
                  float(curves['offline'][t]), float(curves['online'][t]),
                  float(curves['accumulate'][t]))
                 for t in range(len(trajectory) + 1))
    return Table(('step', 'episode', 'offline', 'online', 'accumulate'), rows)


def _episode_end_errors(history, trajectory, value):
    ends = [t + 1 for t, step in enumerate(trajectory) if step.terminal]
    with np.errstate(over='ignore', invalid='ignore'):
        return np.abs(history[ends, 0] - value)


def fig2(config):
    """Mean end-of-episode RMS error over the first ten one-state episodes.

    Both variants learn with lambda = 1 from the same episodes in each run.

    """
    mrp, representation = canonical_task('one-state')
    alphas = config.alphas or parse_grid(FIG2_ALPHAS)
    variants = ('accumulate', 'true-online')
    totals = {(variant, alpha): 0.0 for variant in variants
              for alpha in alphas}
    for run in range(config.runs):
        trajectory = sample_trajectory(mrp, representation,
                                       Rng(mix64(config.seed ^ run)),
                                       episodes=FIG2_EPISODES)
        for variant in variants:
            for alpha in alphas:
                history = theta_history(
                    make_learner(variant, representation.n, alpha, 1.0),
                    trajectory)
                totals[variant, alpha] += float(np.mean(
                    _episode_end_errors(history, trajectory, 1.0)))
    rows = tuple((alpha,) + tuple(totals[variant, alpha] / config.runs
                                  for variant in variants)
                 for alpha in alphas)
    return Table(('alpha',) + variants, rows)


def fig3(config):
    """Asymptotic RMS error on the two-state task at alpha = 0.01."""
    mrp, representation = canonical_task('two-state')
    lambdas = config.lambdas or default_lambdas()
    variants = ('accumulate', 'replace', 'true-online')
    rows = []
    for lam in lambdas:
        errors = []
        for variant in variants:
            learner = make_learner(variant, representation.n, FIG3_ALPHA, lam)
            errors.append(converged_error(learner, mrp, representation,
                                          Rng(config.seed)))
        rows.append((lam,) + tuple(errors))
    return Table(('lambda',) + variants, tuple(rows))


def fig4(config):
    """Best normalized MSE per lambda for each representation.

    Replacing traces are left out for the non-binary representation.

    """
    rows = []
    for kind in FIG4_REPRESENTATIONS:
        variants = ('accumulate', 'true-online')
        if kind != 'random-normalized':
            variants = ('accumulate', 'replace', 'true-online')
        extra = {}
        if config.alphas is not None:
            extra['alphas'] = config.alphas
        if config.lambdas is not None:
            extra['lambdas'] = config.lambdas
        sweep = SweepConfig(task=FIG4_TASK, representation=kind,
                            variants=variants, runs=config.runs,
                            seed=config.seed, workers=config.workers, **extra)
        for point in best_per_lambda(run_sweep(sweep)):
            rows.append((kind, point.variant, point.lam, point.alpha,
                         point.mean, point.se))
    return Table(('representation', 'variant', 'lambda', 'alpha',
                  'metric_mean', 'metric_se'), tuple(rows))


BUILDERS = {1: fig1, 2: fig2, 3: fig3, 4: fig4}


def build_figure(config):
    """Table for ``config.figure``."""
    logger.info('building figure %d', config.figure)
    return BUILDERS[config.figure](config)
