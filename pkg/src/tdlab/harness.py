"""Deterministic parameter sweeps, error metrics and equivalence checks.

Every (alpha, lambda) pair of a sweep is a cell with its own seed,
``mix64(master_seed ^ cell_index)``. All variants of a cell learn from the
same trajectories, so variant comparisons are paired. For generated tasks
run ``r`` of every cell evaluates the same environment instance, drawn from
``mix64(master_seed ^ ENV_STREAM ^ r)``.

"""
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import repeat

import numpy as np

from .algos import (PREDICTION_VARIANTS, make_learner, replay, run_episode,
                    sample_trajectory, stream_transitions, theta_history)
from .base.learner import ControlLearner
from .core import ConfigurationError
from .envs import (ConvergenceError, build_representation, canonical_task,
                   generate_mrp, true_values)
from .grammar import parse_task
from .oracle import (WEIGHTINGS, DegenerateInputError, lms_solution,
                     online_lambda_return_algorithm, sarsa_forward_view,
                     state_weighting, watkins_forward_view)
from .rng import Rng, mix64

logger = logging.getLogger(__name__)

ENV_STREAM = 0x3C6EF372FE94F82B
DEFAULT_GAMMA = 0.99
EQUIVALENCE_TOLERANCE = 1e-8
CONVERGENCE_WINDOW = 100
CONVERGENCE_TOLERANCE = 0.01
BINARY_ONLY_VARIANTS = ('replace',)
ONE_HOT_ONLY_VARIANTS = ('tabular-true-online',)


def default_alphas():
    """10^i for i = -3, -2.8, ..., -1 together with 0.1, 0.2, ..., 2.0."""
    logarithmic = {10.0 ** (i / 5.0) for i in range(-15, -4)}
    linear = {round(0.1 * j, 10) for j in range(1, 21)}
    return tuple(sorted(logarithmic | linear))


def default_lambdas():
    """0, 0.1, ..., 0.9 together with 0.90, 0.91, ..., 1.0."""
    coarse = {i / 10.0 for i in range(10)}
    fine = {i / 100.0 for i in range(90, 101)}
    return tuple(sorted(coarse | fine))


@dataclass(frozen=True)
class SweepConfig:
    """Everything that determines the outcome of a sweep.

    ``environment`` (an ``Mrp``) replaces the ``task`` name when the
    environment comes from a file. ``representation`` defaults to tabular
    features, or to the canonical task's own representation.

    """

    task: str = 'mrp(10,3,0.1)'
    representation: str = None
    variants: tuple = ('accumulate', 'replace', 'true-online')
    alphas: tuple = field(default_factory=default_alphas)
    lambdas: tuple = field(default_factory=default_lambdas)
    steps: int = 100
    runs: int = 50
    seed: int = 0
    weighting: str = 'stationary'
    gamma: float = DEFAULT_GAMMA
    workers: int = 1
    environment: object = None

    def __post_init__(self):
        object.__setattr__(self, 'variants', tuple(self.variants))
        object.__setattr__(self, 'alphas', tuple(sorted(
            float(value) for value in self.alphas)))
        object.__setattr__(self, 'lambdas', tuple(sorted(
            float(value) for value in self.lambdas)))
        if not (self.variants and self.alphas and self.lambdas):
            raise ConfigurationError('variants and grids must be non-empty')
        if self.runs < 1 or self.steps < 1:
            raise ConfigurationError('runs and steps must be positive')
        if self.workers < 1:
            raise ConfigurationError('workers must be positive')
        for variant in self.variants:
            if variant not in PREDICTION_VARIANTS:
                raise ConfigurationError('sweeps take prediction variants '
                                         '({}), not {!r}'.format(
                                             ', '.join(PREDICTION_VARIANTS),
                                             variant))
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambdas):
            raise ConfigurationError('lambda values must lie in [0, 1]')
        if any(alpha <= 0.0 for alpha in self.alphas):
            raise ConfigurationError('alpha values must be positive')
        if self.weighting not in WEIGHTINGS:
            raise ConfigurationError('unknown weighting {!r}'.format(
                self.weighting))
        if self.environment is None:
            parse_task(self.task)
        kind = self.representation_kind
        if kind != 'tabular' and set(self.variants) & set(
                ONE_HOT_ONLY_VARIANTS):
            raise ConfigurationError('tabular-true-online needs tabular '
                                     'features')
        if kind == 'random-normalized' and set(self.variants) & set(
                BINARY_ONLY_VARIANTS):
            raise ConfigurationError('replacing traces are only defined for '
                                     'binary features')

    @property
    def representation_kind(self):
        """Representation used for every run."""
        if self.representation is not None:
            return self.representation
        if self.environment is None:
            spec = parse_task(self.task)
            if not spec.generated:
                return canonical_task(spec.name)[1].kind
        return 'tabular'

    @property
    def cell_count(self):
        """Number of (alpha, lambda) cells."""
        return len(self.alphas) * len(self.lambdas)

    def cell(self, index):
        """``(alpha, lambda)`` of cell ``index``; lambda varies slowest."""
        row, column = divmod(index, len(self.alphas))
        return self.alphas[column], self.lambdas[row]

    def parameters(self):
        """Plain-data parameters for manifests (no environment arrays)."""
        out = {
            'task': self.task,
            'representation': self.representation_kind,
            'variants': list(self.variants),
            'alphas': list(self.alphas),
            'lambdas': list(self.lambdas),
            'steps': self.steps,
            'runs': self.runs,
            'seed': self.seed,
            'weighting': self.weighting,
            'gamma': self.gamma,
        }
        if self.environment is not None:
            out['task'] = 'file'
        return out


@dataclass(frozen=True)
class CellResult:
    """Per-run metrics of one variant in one cell."""

    variant: str
    alpha: float
    lam: float
    metrics: tuple
    diverged_runs: tuple

    @property
    def runs(self):
        """Number of runs, diverged ones included."""
        return len(self.metrics)

    @property
    def diverged(self):
        """Number of diverged runs."""
        return int(sum(self.diverged_runs))

    @property
    def completed(self):
        """Number of runs that stayed within the divergence limit."""
        return self.runs - self.diverged

    @property
    def mean(self):
        """Mean metric over every run."""
        with np.errstate(over='ignore', invalid='ignore'):
            return float(np.mean(self.metrics))

    @property
    def se(self):
        """Standard error of the mean over runs."""
        if self.runs < 2:
            return 0.0
        with np.errstate(over='ignore', invalid='ignore'):
            return float(np.std(self.metrics, ddof=1) / math.sqrt(self.runs))

    @property
    def eligible(self):
        """Whether at most half of the runs diverged."""
        return self.diverged <= 0.5 * self.runs


@dataclass(frozen=True)
class SweepResult:
    """Cells ordered by variant, then lambda, then alpha."""

    config: SweepConfig
    cells: tuple

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def cell(self, variant, alpha, lam):
        """The result of ``variant`` at ``(alpha, lam)``."""
        for cell in self.cells:
            if (cell.variant, cell.alpha, cell.lam) == (variant, alpha, lam):
                return cell
        raise KeyError((variant, alpha, lam))

    def variant_cells(self, variant):
        """All cells of one variant, in row order."""
        return [cell for cell in self.cells if cell.variant == variant]


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Precomputed pieces of the normalized MSE for one environment."""

    mrp: object
    representation: object
    weights: np.ndarray
    target: np.ndarray
    initial_error: float

    def errors(self, history):
        """Weighted squared error of every row of ``history``."""
        with np.errstate(over='ignore', invalid='ignore'):
            predictions = history @ self.representation.table.T
            return ((predictions - self.target) ** 2) @ self.weights


def evaluation(mrp, representation, weighting='stationary', theta_init=None):
    """Build the ``Evaluation`` relative to the LMS solution."""
    theta_star, _ = lms_solution(mrp, representation, weighting)
    weights = state_weighting(mrp, weighting)
    target = representation.table @ theta_star
    theta_init = (np.zeros(representation.n) if theta_init is None
                  else np.asarray(theta_init, dtype=np.float64))
    initial = float(((representation.table @ theta_init - target) ** 2) @
                    weights)
    if initial == 0.0:
        raise DegenerateInputError('the initial weights already attain the '
                                   'LMS solution')
    return Evaluation(mrp, representation, weights, target, initial)


def normalized_mse(theta_history, mrp, representation, horizon,
                   weighting='stationary', reference=None):
    """Mean weighted squared error to the LMS values over steps 1..horizon.

    The error is divided by the error of ``theta_history[0]``.

    """
    history = np.asarray(theta_history, dtype=np.float64)
    if horizon > len(history) - 1:
        raise ConfigurationError('horizon {} exceeds the {} recorded steps'
                                 .format(horizon, len(history) - 1))
    reference = reference or evaluation(mrp, representation, weighting,
                                        history[0])
    return float(np.mean(reference.errors(history[1:horizon + 1])) /
                 reference.initial_error)


def rms_error_curve(theta_history, mrp, representation, weighting='uniform',
                    normalize=False):
    """Weighted RMS error to the true values after every step.

    With ``normalize`` the curve is divided by its first entry.

    """
    d = state_weighting(mrp, weighting)
    values = true_values(mrp)
    with np.errstate(over='ignore', invalid='ignore'):
        predictions = np.asarray(theta_history) @ representation.table.T
        curve = np.sqrt(((predictions - values) ** 2) @ d)
    if normalize:
        if curve[0] == 0.0:
            raise DegenerateInputError('the initial RMS error is 0')
        curve = curve / curve[0]
    return curve


def _settled(errors, t, window, tolerance):
    before = errors[t - window]
    return abs(errors[t] - before) < tolerance * before


def asymptotic_error(errors, window=CONVERGENCE_WINDOW,
                     tolerance=CONVERGENCE_TOLERANCE):
    """Error once it changed less than ``tolerance`` over ``window`` steps.

    The relative change between t - window and t must stay below the
    tolerance for ``window`` consecutive steps t, so a curve that merely
    returns to an earlier level does not count as settled. Raise
    ``ConvergenceError`` when the sequence never settles.

    """
    errors = np.asarray(errors, dtype=np.float64)
    streak = 0
    for t in range(window, len(errors)):
        streak = streak + 1 if _settled(errors, t, window, tolerance) else 0
        if streak >= window:
            return float(errors[t])
    residual = (abs(errors[-1] - errors[-1 - window])
                if len(errors) > window else float('inf'))
    raise ConvergenceError(len(errors), residual)


def converged_error(learner, mrp, representation, rng,
                    weighting='uniform', window=CONVERGENCE_WINDOW,
                    tolerance=CONVERGENCE_TOLERANCE, max_steps=1000000):
    """Run ``learner`` on ``mrp`` until its RMS error settles; return it.

    Uses the same settling rule as ``asymptotic_error``.

    """
    d = state_weighting(mrp, weighting)
    values = true_values(mrp)
    table = representation.table

    def error():
        return math.sqrt(((table @ learner.theta - values) ** 2) @ d)

    errors = [error()]
    streak = 0
    for transition in stream_transitions(mrp, representation, rng):
        learner.step(transition)
        errors.append(error())
        t = len(errors) - 1
        if t >= window:
            streak = streak + 1 if _settled(errors, t, window,
                                            tolerance) else 0
            if streak >= window:
                return errors[t]
        if t >= max_steps:
            raise ConvergenceError(max_steps, abs(errors[t] - errors[t - 1]))
    return errors[-1]


@dataclass(frozen=True, eq=False)
class TaskInstance:
    """Environment, features and metric reference of one run."""

    mrp: object
    representation: object
    reference: Evaluation


@lru_cache(maxsize=1024)
def task_instance(config, run):
    """Environment of run ``run``; cached per process."""
    kind = config.representation_kind
    if config.environment is not None:
        mrp = config.environment
        representation = build_representation(kind, mrp, config.seed)
    else:
        spec = parse_task(config.task)
        if spec.generated:
            seed = mix64(config.seed ^ ENV_STREAM ^ run)
            mrp = generate_mrp(spec.k, spec.b, spec.sigma, config.gamma, seed)
            representation = build_representation(kind, mrp, mix64(seed))
        else:
            mrp, representation = canonical_task(spec.name)
            if representation.kind != kind:
                representation = build_representation(kind, mrp,
                                                      config.seed)
    reference = evaluation(mrp, representation, config.weighting)
    return TaskInstance(mrp, representation, reference)


def run_cell(config, index):
    """Run every variant of cell ``index``; return its ``CellResult`` list."""
    alpha, lam = config.cell(index)
    cell_rng = Rng(mix64(config.seed ^ index))
    metrics = {variant: [] for variant in config.variants}
    diverged = {variant: [] for variant in config.variants}
    for run in range(config.runs):
        instance = task_instance(config, run)
        trajectory = sample_trajectory(instance.mrp, instance.representation,
                                       cell_rng.split(run), steps=config.steps)
        for variant in config.variants:
            learner = make_learner(variant, instance.representation.n, alpha,
                                   lam)
            history, flag = replay(learner, trajectory)
            metrics[variant].append(normalized_mse(
                history, instance.mrp, instance.representation, config.steps,
                config.weighting, instance.reference))
            diverged[variant].append(flag)
    return [CellResult(variant, alpha, lam, tuple(metrics[variant]),
                       tuple(diverged[variant]))
            for variant in config.variants]


def run_sweep(config):
    """Run every cell of ``config`` and fold the results by cell index."""
    logger.info('sweep %s/%s: %d cells x %d runs, variants %s',
                config.task, config.representation_kind, config.cell_count,
                config.runs, ','.join(config.variants))
    indices = range(config.cell_count)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, config.cell_count // (4 * config.workers))
            results = list(pool.map(run_cell, repeat(config), indices,
                                    chunksize=chunk))
    else:
        results = [run_cell(config, index) for index in indices]
    cells = []
    for position, variant in enumerate(config.variants):
        cells.extend(result[position] for result in results)
    for cell in cells:
        if cell.diverged:
            logger.debug('%s alpha=%g lambda=%g: %d/%d runs diverged',
                         cell.variant, cell.alpha, cell.lam, cell.diverged,
                         cell.runs)
    logger.info('sweep finished: %d cells, %d diverged runs', len(cells),
                sum(cell.diverged for cell in cells))
    return SweepResult(config, tuple(cells))


def default_workers():
    """Worker processes to use when none are requested."""
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BestPoint:
    """Best step-size of one variant at one lambda; ``alpha`` is None when
    every cell diverged.

    """

    variant: str
    lam: float
    alpha: float = None
    mean: float = None
    se: float = None

    @property
    def present(self):
        """Whether an eligible cell exists."""
        return self.alpha is not None


def best_per_lambda(result):
    """Minimum mean metric over alpha for every (variant, lambda).

    Cells where more than half of the runs diverged are skipped; ties go to
    the smaller alpha.

    """
    points = []
    for variant in result.config.variants:
        for lam in result.config.lambdas:
            best = None
            for alpha in result.config.alphas:
                cell = result.cell(variant, alpha, lam)
                if cell.eligible and (best is None or cell.mean < best.mean):
                    best = cell
            if best is None:
                points.append(BestPoint(variant, lam))
            else:
                points.append(BestPoint(variant, lam, best.alpha, best.mean,
                                        best.se))
    return tuple(points)


def best_overall(points, variant):
    """The best present point of ``variant`` over every lambda."""
    present = [point for point in points
               if point.variant == variant and point.present]
    if not present:
        return None
    return min(present, key=lambda point: (point.mean, point.lam))


@dataclass(frozen=True)
class EquivalenceReport:
    """Largest relative weight gap between two algorithms on one trajectory."""

    pair: str
    max_difference: float
    steps: int
    tolerance: float = EQUIVALENCE_TOLERANCE

    @property
    def passed(self):
        """Whether the gap stays within the tolerance."""
        return self.max_difference <= self.tolerance

    def __str__(self):
        return '{} {}: max relative difference {:.3e} over {} steps'.format(
            'PASS' if self.passed else 'FAIL', self.pair, self.max_difference,
            self.steps)


def _backward(variant):
    def run(traj, alpha, lam, theta_init):
        learner = make_learner(variant, traj.num_features, alpha, lam,
                               num_actions=traj.num_actions,
                               theta_init=theta_init)
        if isinstance(learner, ControlLearner) and not traj.annotated:
            raise ConfigurationError('{} needs a trajectory annotated with '
                                     'actions and greedy flags'.format(
                                         variant))
        return theta_history(learner, traj)
    return run


def _forward(view):
    def run(traj, alpha, lam, theta_init):
        return view(traj, alpha, lam, theta_init).theta_history
    return run


PAIRS = {
    'true-online/oracle': (_backward('true-online'),
                           _forward(online_lambda_return_algorithm)),
    'accumulate/oracle': (_backward('accumulate'),
                          _forward(online_lambda_return_algorithm)),
    'sarsa/oracle': (_backward('true-online-sarsa'),
                     _forward(sarsa_forward_view)),
    'watkins/oracle': (_backward('true-online-watkins-q'),
                       _forward(watkins_forward_view)),
    'alpha-t/true-online': (_backward('true-online-alpha-t'),
                            _backward('true-online')),
    'tabular/true-online': (_backward('tabular-true-online'),
                            _backward('true-online')),
    'watkins/sarsa': (_backward('true-online-watkins-q'),
                      _backward('true-online-sarsa')),
    'accumulate/true-online': (_backward('accumulate'),
                               _backward('true-online')),
    'replace/true-online': (_backward('replace'), _backward('true-online')),
}


def max_relative_difference(history_a, history_b):
    """max_t ||a_t - b_t||_inf / (1 + ||b_t||_inf)."""
    gaps = np.max(np.abs(history_a - history_b), axis=1)
    scales = 1.0 + np.max(np.abs(history_b), axis=1)
    return float(np.max(gaps / scales))


def certify_equivalence(traj, alpha, lam, theta_init, pair,
                        tolerance=EQUIVALENCE_TOLERANCE):
    """Run both sides of ``pair`` on ``traj`` and compare their weights."""
    try:
        side_a, side_b = PAIRS[pair]
    except KeyError:
        raise ConfigurationError('unknown pair {!r} (choose from {})'.format(
            pair, ', '.join(PAIRS)))
    if theta_init is None:
        theta_init = np.zeros(traj.num_features * traj.num_actions)
    history_a = side_a(traj, alpha, lam, theta_init)
    history_b = side_b(traj, alpha, lam, theta_init)
    report = EquivalenceReport(pair, max_relative_difference(history_a,
                                                             history_b),
                               len(traj), tolerance)
    logger.debug('%s', report)
    return report


def control_trajectory(mdp, representation, variant, alpha, lam, epsilon,
                       seed, steps):
    """Trajectory generated by a control learner acting in ``mdp``.

    Greedy flags are relative to that learner's own weights.

    """
    learner = make_learner(variant, representation.n, alpha, lam,
                           num_actions=mdp.num_actions, epsilon=epsilon)
    _, trajectory = run_episode(learner, mdp, representation, rng=Rng(seed),
                                max_steps=steps)
    return trajectory
