"""Check suites: exact equivalences, closed forms and sweep-level claims.

Each check returns a ``CheckResult``; ``run_verify`` runs a whole suite and
the command line prints every result followed by one JSON summary line per
check.

"""
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .algos import (PREDICTION_VARIANTS, make_learner, sample_trajectory,
                    theta_history)
from .core import ConfigurationError, Trajectory, Transition, features, zeros
from .envs import (build_representation, canonical_task, generate_mdp,
                   generate_mrp)
from .harness import (DEFAULT_GAMMA, SweepConfig, best_overall,
                      best_per_lambda, certify_equivalence,
                      control_trajectory, run_sweep)
from .oracle import prop2_condition_holds, theorem1_ratio
from .rng import Rng, mix64

logger = logging.getLogger(__name__)

SUITES = ('equivalence', 'theorem1', 'closed-forms', 'propositions',
          'variants', 'dominance', 'divergence', 'all')
EXACT_TOLERANCE = 1e-12
ORACLE_TOLERANCE = 1e-8
TRAJECTORY_STEPS = 200
VARIANT_TRIALS = 10

EQUIVALENCE_TASKS = ('mrp(10,3,0.1)', 'random-walk-10')
EQUIVALENCE_REPRESENTATIONS = ('tabular', 'binary', 'random-normalized')
EQUIVALENCE_ALPHAS = (0.01, 0.1, 0.5, 1.0, 2.0)
EQUIVALENCE_LAMBDAS = (0.0, 0.3, 0.7, 0.9, 0.95, 1.0)

THEOREM_ALPHAS = (1e-1, 1e-2, 1e-3, 1e-4)
THEOREM_LAMBDA = 0.9
THEOREM_RATIO_RANGE = (0.03, 0.3)

CLOSED_FORM_VALUES = (-1.0, 0.0, 0.5, 1.0, 2.0)
CLOSED_FORM_ALPHAS = (0.01, 0.1, 0.3, 0.5, 1.0)
CLOSED_FORM_LENGTHS = (1, 2, 3, 5, 10)

DOMINANCE_TASK = 'mrp(10,3,0.1)'
DOMINANCE_REPRESENTATIONS = ('tabular', 'binary', 'random-normalized')
TRACE_GAIN = 0.95
DIVERGENT_CELL = (2.0, 1.0)
STABLE_ALPHA = 1.0


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check."""

    name: str
    passed: bool
    detail: str
    value: float = None
    lines: tuple = ()

    def __str__(self):
        head = '{} {}: {}'.format('PASS' if self.passed else 'FAIL',
                                  self.name, self.detail)
        return '\n'.join((head,) + tuple('    ' + line
                                         for line in self.lines))

    def summary(self):
        """Machine-readable one-line summary."""
        value = self.value
        if value is not None and not math.isfinite(value):
            value = repr(value)
        return json.dumps({'check': self.name, 'passed': bool(self.passed),
                           'value': value}, sort_keys=True)


@dataclass(frozen=True)
class VerifyConfig:
    """Which suite to run and with how much work."""

    suite: str = 'all'
    trials: int = 100
    seed: int = 0
    runs: int = 50
    steps: int = 100
    workers: int = 1
    alphas: tuple = None
    lambdas: tuple = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigurationError('unknown suite {!r} (choose from {})'
                                     .format(self.suite, ', '.join(SUITES)))
        if self.trials < 1 or self.runs < 1 or self.steps < 1:
            raise ConfigurationError('trials, runs and steps must be '
                                     'positive')

    def parameters(self):
        """Plain-data parameters for manifests."""
        return {'suite': self.suite, 'trials': self.trials,
                'seed': self.seed, 'runs': self.runs, 'steps': self.steps,
                'alphas': None if self.alphas is None else list(self.alphas),
                'lambdas': (None if self.lambdas is None
                            else list(self.lambdas))}


def _pick(rng, options):
    return options[rng.integers(len(options))]


def _prediction_setting(rng, task, kind):
    if task == 'random-walk-10':
        mrp, _ = canonical_task(task)
    else:
        mrp = generate_mrp(10, 3, 0.1, DEFAULT_GAMMA, rng.split(0).seed)
    representation = build_representation(kind, mrp, rng.split(1).seed)
    trajectory = sample_trajectory(mrp, representation, rng.split(2),
                                   steps=TRAJECTORY_STEPS)
    return representation, trajectory


def check_equivalence(config):
    """True online TD(lambda) against the online lambda-return algorithm."""
    failures = []
    worst = 0.0
    for trial in range(config.trials):
        rng = Rng(mix64(config.seed ^ trial))
        task = _pick(rng, EQUIVALENCE_TASKS)
        kind = _pick(rng, EQUIVALENCE_REPRESENTATIONS)
        alpha = _pick(rng, EQUIVALENCE_ALPHAS)
        lam = _pick(rng, EQUIVALENCE_LAMBDAS)
        representation, trajectory = _prediction_setting(rng, task, kind)
        theta_init = rng.split(3).normal(size=representation.n)
        report = certify_equivalence(trajectory, alpha, lam, theta_init,
                                     'true-online/oracle', ORACLE_TOLERANCE)
        if not report.max_difference <= worst:
            worst = report.max_difference
        if not report.passed:
            failures.append('trial {}: {} {} alpha={} lambda={}: {}'.format(
                trial, task, kind, alpha, lam, report))
    passed = config.trials - len(failures)
    return CheckResult('equivalence', not failures,
                       '{}/{} trials within {:g} (worst {:.3e})'.format(
                           passed, config.trials, ORACLE_TOLERANCE, worst),
                       worst, tuple(failures))


def check_theorem1(config):
    """The accumulate/forward-view gap shrinks linearly with alpha."""
    mrp, representation = canonical_task('random-walk-10')
    trajectory = sample_trajectory(mrp, representation, Rng(config.seed),
                                   episodes=1)
    theta_init = np.zeros(representation.n)
    ratios = [theorem1_ratio(trajectory, alpha, THEOREM_LAMBDA, theta_init)
              for alpha in THEOREM_ALPHAS]
    lines = ['alpha={:g} ratio={:.6e}'.format(alpha, ratio)
             for alpha, ratio in zip(THEOREM_ALPHAS, ratios)]
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    low, high = THEOREM_RATIO_RANGE
    quotients = [ratios[i + 1] / ratios[i]
                 for i in range(len(ratios) - 3, len(ratios) - 1)]
    linear = all(low <= quotient <= high for quotient in quotients)
    lines.append('last quotients: ' + ', '.join('{:.4f}'.format(quotient)
                                                for quotient in quotients))
    return CheckResult('theorem1', decreasing and linear,
                       'ratio {} with alpha, quotients {} [{}, {}]'.format(
                           'decreases' if decreasing else 'does not decrease',
                           'within' if linear else 'outside', low, high),
                       ratios[-1], tuple(lines))


def one_state_episode(length):
    """``length - 1`` self-loops with reward 0, then reward 1 and stop."""
    phi = features([1.0])
    steps = [Transition(phi, 0.0, phi, 1.0) for _ in range(length - 1)]
    steps.append(Transition(phi, 1.0, zeros(1), 1.0, terminal=True))
    return Trajectory(steps)


def _closed_form_error(variant, expected):
    worst = 0.0
    for v0 in CLOSED_FORM_VALUES:
        for alpha in CLOSED_FORM_ALPHAS:
            for length in CLOSED_FORM_LENGTHS:
                learner = make_learner(variant, 1, alpha, 1.0,
                                       theta_init=[v0])
                final = theta_history(learner, one_state_episode(length))[-1]
                target = expected(v0, alpha, length)
                worst = max(worst, abs(final[0] - target) /
                            max(1.0, abs(target)))
    return worst


def check_closed_forms(config):
    """Final one-state values against their pseudo step-size closed forms."""
    del config
    forms = {
        'accumulate': lambda v0, alpha, T: v0 + T * alpha * (1.0 - v0),
        'true-online': lambda v0, alpha, T: (
            v0 + (1.0 - (1.0 - alpha) ** T) * (1.0 - v0)),
    }
    results = []
    for variant, expected in forms.items():
        worst = _closed_form_error(variant, expected)
        results.append(CheckResult(
            'closed-forms/' + variant, worst <= EXACT_TOLERANCE,
            'max relative error {:.3e} over {} settings'.format(
                worst, len(CLOSED_FORM_VALUES) * len(CLOSED_FORM_ALPHAS) *
                len(CLOSED_FORM_LENGTHS)), worst))
    return results


def _spread(histories):
    reference = histories[0]
    return max(float(np.max(np.abs(history - reference)))
               for history in histories[1:])


def no_revisit_trajectory(rng, n=10, episodes=5, gamma=0.9):
    """Tabular episodes that never revisit a state within one episode."""
    steps = []
    for episode in range(episodes):
        source = rng.split(episode)
        length = 1 + source.integers(n)
        states = source.sample_without_replacement(n, length)
        rewards = source.normal(size=length)
        for position, state in enumerate(states):
            phi = np.zeros(n)
            phi[state] = 1.0
            last = position == length - 1
            phi_next = np.zeros(n)
            if not last:
                phi_next[states[position + 1]] = 1.0
            steps.append(Transition(features(phi), float(rewards[position]),
                                    features(phi_next), gamma, last))
    return Trajectory(steps)


def check_propositions(config):
    """lambda = 0 and no-revisit episodes make every variant agree."""
    rng = Rng(config.seed)
    mrp = generate_mrp(10, 3, 0.1, DEFAULT_GAMMA, rng.split(0).seed)
    representation = build_representation('tabular', mrp)
    trajectory = sample_trajectory(mrp, representation, rng.split(1),
                                   steps=TRAJECTORY_STEPS)
    histories = [theta_history(make_learner(variant, representation.n, 0.1,
                                            0.0), trajectory)
                 for variant in PREDICTION_VARIANTS]
    zero = _spread(histories)
    results = [CheckResult('propositions/lambda-zero',
                           zero <= EXACT_TOLERANCE,
                           '{} variants, max difference {:.3e}'.format(
                               len(histories), zero), zero)]
    episodes = no_revisit_trajectory(rng.split(2))
    holds = prop2_condition_holds(episodes, 0.9)
    histories = [theta_history(make_learner(variant, episodes.num_features,
                                            0.3, 0.9), episodes)
                 for variant in PREDICTION_VARIANTS]
    revisit = _spread(histories)
    results.append(CheckResult(
        'propositions/no-revisit', holds and revisit <= EXACT_TOLERANCE,
        'trace condition {}, max difference {:.3e}'.format(
            'holds' if holds else 'violated', revisit), revisit))
    return results


def _variant_check(name, pair, tolerance, settings):
    worst = 0.0
    failures = []
    for trial, (trajectory, alpha, lam) in enumerate(settings):
        report = certify_equivalence(trajectory, alpha, lam, None, pair,
                                     tolerance)
        if not report.max_difference <= worst:
            worst = report.max_difference
        if not report.passed:
            failures.append('trial {}: {}'.format(trial, report))
    return CheckResult(name, not failures,
                       '{} within {:g} (worst {:.3e})'.format(
                           pair, tolerance, worst), worst, tuple(failures))


def _control_settings(config, variant, epsilon):
    for trial in range(min(config.trials, VARIANT_TRIALS)):
        rng = Rng(mix64(config.seed ^ trial))
        mdp = generate_mdp(10, 3, 3, 0.1, 0.9, rng.split(0).seed)
        representation = build_representation('tabular', mdp)
        alpha = _pick(rng, (0.01, 0.1, 0.5))
        lam = _pick(rng, EQUIVALENCE_LAMBDAS)
        yield (control_trajectory(mdp, representation, variant, alpha, lam,
                                  epsilon, rng.split(1).seed,
                                  TRAJECTORY_STEPS), alpha, lam)


def _tabular_settings(config):
    for trial in range(min(config.trials, VARIANT_TRIALS)):
        rng = Rng(mix64(config.seed ^ trial))
        _, trajectory = _prediction_setting(rng, DOMINANCE_TASK, 'tabular')
        yield (trajectory, _pick(rng, (0.01, 0.1, 0.5, 1.0)),
               _pick(rng, EQUIVALENCE_LAMBDAS))


def check_variants(config):
    """Cross-checks between learner variants and their forward views."""
    return [
        _variant_check('variants/alpha-t', 'alpha-t/true-online',
                       EXACT_TOLERANCE, _tabular_settings(config)),
        _variant_check('variants/tabular', 'tabular/true-online',
                       EXACT_TOLERANCE, _tabular_settings(config)),
        _variant_check('variants/watkins-greedy', 'watkins/sarsa',
                       EXACT_TOLERANCE,
                       _control_settings(config, 'true-online-sarsa', 0.0)),
        _variant_check('variants/sarsa-forward', 'sarsa/oracle',
                       ORACLE_TOLERANCE,
                       _control_settings(config, 'true-online-sarsa', 0.3)),
        _variant_check('variants/watkins-forward', 'watkins/oracle',
                       ORACLE_TOLERANCE,
                       _control_settings(config, 'true-online-watkins-q',
                                         0.3)),
    ]


class SweepCache:
    """Dominance sweeps, run at most once per representation."""

    def __init__(self, config):
        self.config = config
        self._results = {}

    def variants(self, kind):
        """Variants compared on representation ``kind``."""
        if kind == 'random-normalized':
            return ('accumulate', 'true-online')
        return ('accumulate', 'replace', 'true-online')

    def __call__(self, kind):
        if kind not in self._results:
            extra = {}
            if self.config.alphas is not None:
                extra['alphas'] = self.config.alphas
            if self.config.lambdas is not None:
                extra['lambdas'] = self.config.lambdas
            sweep = SweepConfig(task=DOMINANCE_TASK, representation=kind,
                                variants=self.variants(kind),
                                steps=self.config.steps,
                                runs=self.config.runs, seed=self.config.seed,
                                workers=self.config.workers, **extra)
            self._results[kind] = run_sweep(sweep)
        return self._results[kind]


def _dominates(best, other):
    if other is None:
        return True
    if best is None:
        return False
    return best.mean <= other.mean + 2.0 * math.hypot(best.se, other.se)


def check_dominance(config, sweeps=None):
    """Best true online error against the other traces, per representation."""
    sweeps = sweeps or SweepCache(config)
    results = []
    for kind in DOMINANCE_REPRESENTATIONS:
        points = best_per_lambda(sweeps(kind))
        best = best_overall(points, 'true-online')
        lines = ['{}: lambda={} alpha={} mean={:.6g} se={:.3g}'.format(
            variant, point.lam, point.alpha, point.mean, point.se)
            for variant, point in ((variant, best_overall(points, variant))
                                   for variant in sweeps.variants(kind))
            if point is not None]
        passed = all(_dominates(best, best_overall(points, variant))
                     for variant in sweeps.variants(kind)
                     if variant != 'true-online')
        detail = 'true online {} the other traces'.format(
            'matches or beats' if passed else 'loses to')
        if kind == 'random-normalized':
            zero = [point for point in points if point.variant ==
                    'true-online' and point.lam == 0.0 and point.present]
            gain = (best is not None and bool(zero) and
                    best.mean < TRACE_GAIN * zero[0].mean)
            passed = passed and gain
            detail += '; traces {} over lambda = 0'.format(
                'help' if gain else 'do not help')
        results.append(CheckResult('dominance/' + kind, passed, detail,
                                   None if best is None else best.mean,
                                   tuple(lines)))
    return results


def check_divergence(config, sweeps=None):
    """Accumulating traces diverge at large steps, true online does not."""
    sweeps = sweeps or SweepCache(config)
    result = sweeps('tabular')
    alpha, lam = DIVERGENT_CELL
    try:
        unstable = result.cell('accumulate', alpha, lam).diverged
    except KeyError:
        return CheckResult('divergence', False,
                           'the grid lacks alpha={} lambda={}'.format(alpha,
                                                                      lam))
    stable = sum(cell.diverged for cell in result.variant_cells('true-online')
                 if cell.alpha <= STABLE_ALPHA)
    passed = unstable >= 1 and stable == 0
    return CheckResult('divergence', passed,
                       'accumulate diverged in {} runs at alpha={} lambda={};'
                       ' true online diverged in {} runs with alpha <= {}'
                       .format(unstable, alpha, lam, stable, STABLE_ALPHA),
                       float(stable))


def _listed(result):
    return result if isinstance(result, list) else [result]


def run_verify(config):
    """Run ``config.suite`` and return its ``CheckResult`` list."""
    sweeps = SweepCache(config)
    suites = {
        'equivalence': check_equivalence,
        'theorem1': check_theorem1,
        'closed-forms': check_closed_forms,
        'propositions': check_propositions,
        'variants': check_variants,
        'dominance': lambda config: check_dominance(config, sweeps),
        'divergence': lambda config: check_divergence(config, sweeps),
    }
    names = [name for name in SUITES[:-1]
             if config.suite in (name, 'all')]
    results = []
    for name in names:
        logger.info('running suite %s', name)
        for result in _listed(suites[name](config)):
            logger.info('%s', str(result).splitlines()[0])
            results.append(result)
    return results
