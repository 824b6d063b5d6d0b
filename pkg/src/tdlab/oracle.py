"""Forward-view reference algorithms and diagnostics.

Indices follow the trajectory: step ``k`` is the transition
``(phi_k, R_{k+1}, phi_{k+1})`` and ``theta_lookup(j)`` supplies the weights
``theta_j`` used to bootstrap from ``phi_{j+1}``. An n-step return is cut at
the end of its episode, where the bootstrap term is 0.

These functions favour transparency over speed; the online forward view
costs O(t) updates at step t.

"""
import logging
from dataclasses import dataclass

import numpy as np

from .algos import AccumulateTD, replay
from .core import (ConfigurationError, action_values, as_dense, dot,
                   stack_action_features)
from .envs import (build_representation, on_policy_distribution,
                   true_values, uniform_distribution)

logger = logging.getLogger(__name__)

WEIGHTINGS = ('stationary', 'uniform')


class HorizonError(ValueError):
    """A forward-view target reaches beyond the recorded data."""

    def __str__(self):
        return 'Horizon error: {}'.format(
            ' '.join(str(arg) for arg in self.args))


class DegenerateInputError(ValueError):
    """A ratio or normalization has a zero denominator."""

    def __str__(self):
        return 'Degenerate input: {}'.format(
            ' '.join(str(arg) for arg in self.args))


def _episode_bounds(trajectory):
    """``(start, stop)`` index pairs of the episodes in ``trajectory``."""
    bounds, start = [], 0
    for index, step in enumerate(trajectory):
        if step.terminal:
            bounds.append((start, index + 1))
            start = index + 1
    if start < len(trajectory):
        bounds.append((start, len(trajectory)))
    return bounds


def _episode_of(trajectory, t):
    for start, stop in _episode_bounds(trajectory):
        if start <= t < stop:
            return start, stop
    raise HorizonError('step {} outside the trajectory'.format(t))


def n_step_return(traj, t, n, theta_lookup):
    """The n-step return from step ``t``.

    sum_{i=1..n} gamma^(i-1) R_{t+i} + gamma^n theta_{t+n-1} . phi_{t+n},
    truncated at the end of the episode.

    """
    if n < 1:
        raise HorizonError('n must be at least 1, got {}'.format(n))
    total, discount = 0.0, 1.0
    for i in range(n):
        index = t + i
        if index >= len(traj):
            raise HorizonError('{}-step return from step {} needs {} steps, '
                               'only {} recorded'.format(n, t, t + n,
                                                         len(traj)))
        step = traj[index]
        total += discount * step.reward
        discount *= step.gamma
        if step.terminal:
            return total
    last = traj[t + n - 1]
    return total + discount * dot(theta_lookup(t + n - 1), last.phi_next)


def interim_lambda_return(traj, k, h, theta_lookup, lam):
    """The interim lambda-return of step ``k`` with horizon ``h``.

    (1 - lambda) sum_{n=1}^{h-k-1} lambda^(n-1) G^(n) + lambda^(h-k-1) G^(h-k)

    """
    if h <= k:
        raise HorizonError('horizon {} must exceed step {}'.format(h, k))
    if h > len(traj):
        raise HorizonError('horizon {} beyond the {} recorded steps'
                           .format(h, len(traj)))
    partial = sum(lam ** (n - 1) * n_step_return(traj, k, n, theta_lookup)
                  for n in range(1, h - k))
    return ((1.0 - lam) * partial +
            lam ** (h - k - 1) * n_step_return(traj, k, h - k, theta_lookup))


def _require_complete(traj):
    if not traj.complete:
        raise HorizonError('a complete episode is required')


def offline_lambda_return(traj, t, theta_lookup, lam):
    """The lambda-return of step ``t`` in a complete episode."""
    _require_complete(traj)
    _, stop = _episode_of(traj, t)
    return interim_lambda_return(traj, t, stop, theta_lookup, lam)


@dataclass(frozen=True, eq=False)
class ForwardViewRun:
    """Result of an online forward view.

    ``theta_history[t]`` is theta_t = theta_t^t; ``intermediate(t)`` replays
    horizon ``t`` and returns the sequence theta_k^t from the start of the
    episode containing step ``t``.

    """

    theta_history: np.ndarray
    trajectory: object
    alpha: float
    lam: float
    theta_init: np.ndarray
    kind: str = 'prediction'

    def __len__(self):
        return len(self.theta_history)

    @property
    def final(self):
        """Weights after the last processed step."""
        return self.theta_history[-1]

    def intermediate(self, t):
        """Rows theta_k^t for k from the episode start up to ``t``."""
        if not 0 < t <= len(self.trajectory):
            raise HorizonError('horizon {} outside [1, {}]'.format(
                t, len(self.trajectory)))
        start, _ = _episode_of(self.trajectory, t - 1)
        inputs, bootstrap, cut = _FORWARD_VIEWS[self.kind](
            self.trajectory)
        rows = [self.theta_history[start].copy()]
        _horizon(self.trajectory, start, t, self.alpha, self.lam,
                 self.theta_history, inputs, bootstrap, cut, rows)
        return np.array(rows)


def _prediction_view(traj):
    def inputs(k):
        return traj[k].phi

    def bootstrap(theta, j):
        return dot(theta, traj[j].phi_next)

    return inputs, bootstrap, None


def _sarsa_view(traj):
    num_actions = traj.num_actions

    def inputs(k):
        return stack_action_features(traj[k].phi, traj[k].action, num_actions)

    def bootstrap(theta, j):
        step = traj[j]
        if step.terminal:
            return 0.0
        return dot(theta, stack_action_features(step.phi_next,
                                                step.next_action,
                                                num_actions))

    return inputs, bootstrap, None


def _watkins_view(traj):
    inputs, _, _ = _sarsa_view(traj)
    num_actions = traj.num_actions

    def bootstrap(theta, j):
        step = traj[j]
        if step.terminal:
            return 0.0
        return float(np.max(action_values(theta, step.phi_next,
                                          num_actions)))

    return inputs, bootstrap, traj.greedy_flags()


_FORWARD_VIEWS = {
    'prediction': _prediction_view,
    'sarsa': _sarsa_view,
    'watkins': _watkins_view,
}


def _horizon(traj, start, t, alpha, lam, history, inputs, bootstrap, cut,
             rows=None):
    """Targets and replay for horizon ``t`` of the episode at ``start``.

    Direct evaluation of every interim target from ``history``; used for
    ``intermediate`` queries.

    """
    theta = history[start].copy()
    for k in range(start, t):
        h = t
        if cut is not None:
            for j in range(k + 1, t):
                if not cut[j]:
                    h = j
                    break
        target = _interim_target(traj, k, h, lam, history, bootstrap)
        x = inputs(k)
        theta = theta + alpha * (target - dot(theta, x)) * as_dense(x)
        if rows is not None:
            rows.append(theta.copy())
    return theta


def _interim_target(traj, k, h, lam, history, bootstrap):
    returns = []
    total, discount = 0.0, 1.0
    for j in range(k, h):
        step = traj[j]
        total += discount * step.reward
        discount *= step.gamma
        returns.append(total + discount * bootstrap(history[j], j))
    partial = sum(lam ** n * value for n, value in enumerate(returns[:-1]))
    return (1.0 - lam) * partial + lam ** (h - k - 1) * returns[-1]


def _online_forward_view(traj, alpha, lam, theta_init, kind):
    inputs, bootstrap, cut = _FORWARD_VIEWS[kind](traj)
    size = len(traj)
    theta = np.array(theta_init, dtype=np.float64)
    history = np.empty((size + 1, len(theta)))
    history[0] = theta
    for start, stop in _episode_bounds(traj):
        episode_init = history[start].copy()
        length = stop - start
        # running per-step sums: rewards, discounts, sum of lambda^(n-1) G^(n)
        rewards = np.zeros(length)
        discounts = np.ones(length)
        partial = np.zeros(length)
        targets = np.zeros(length)
        growing = np.ones(length, dtype=bool)
        xs = [inputs(k) for k in range(start, stop)]
        for t in range(start + 1, stop + 1):
            step = traj[t - 1]
            live = t - start
            rewards[:live] += discounts[:live] * step.reward
            discounts[:live] *= step.gamma
            value = bootstrap(history[t - 1], t - 1)
            returns = rewards[:live] + discounts[:live] * value
            powers = lam ** np.arange(live - 1, -1, -1, dtype=np.float64)
            active = growing[:live]
            targets[:live][active] = ((1.0 - lam) * partial[:live][active] +
                                      powers[active] * returns[active])
            partial[:live] += powers * returns
            if cut is not None and t < stop and not cut[t]:
                growing[:live] = False
            theta = episode_init.copy()
            for k in range(live):
                x = xs[k]
                theta += (alpha * (targets[k] - dot(theta, x))) * as_dense(x)
            history[t] = theta
    return ForwardViewRun(history, traj, alpha, lam,
                          np.array(theta_init, dtype=np.float64), kind)


def online_lambda_return_algorithm(traj, alpha, lam, theta_init):
    """The online lambda-return algorithm.

    At every step t the whole update sequence of the current episode is
    replayed from the episode's initial weights toward the interim targets
    with horizon t. Bootstraps use theta_j = theta_j^j. A new episode
    starts from the final weights of the previous one.

    """
    return _online_forward_view(traj, alpha, lam, theta_init, 'prediction')


def sarsa_forward_view(traj, alpha, lam, theta_init):
    """Online lambda-return algorithm on the state-action features psi."""
    if not traj.annotated:
        raise ConfigurationError('the trajectory is not annotated with '
                                 'actions')
    return _online_forward_view(traj, alpha, lam, theta_init, 'sarsa')


def watkins_forward_view(traj, alpha, lam, theta_init):
    """Online forward view toward the truncated targets U_t^h."""
    if not traj.annotated:
        raise ConfigurationError('the trajectory is not annotated with '
                                 'actions and greedy flags')
    return _online_forward_view(traj, alpha, lam, theta_init, 'watkins')


def watkins_interim_target(traj, t, h, theta_lookup, lam):
    """U_t^h: the interim target with max-bootstraps, cut at z = min(h, tau).

    tau is the first step after ``t`` whose action was not greedy.

    """
    if not traj.annotated:
        raise ConfigurationError('the trajectory is not annotated with '
                                 'actions and greedy flags')
    if h <= t:
        raise HorizonError('horizon {} must exceed step {}'.format(h, t))
    if h > len(traj):
        raise HorizonError('horizon {} beyond the {} recorded steps'
                           .format(h, len(traj)))
    flags = traj.greedy_flags()
    z = h
    for j in range(t + 1, h):
        if not flags[j]:
            z = j
            break
    _, bootstrap, _ = _watkins_view(traj)
    returns = []
    total, discount = 0.0, 1.0
    for j in range(t, z):
        step = traj[j]
        total += discount * step.reward
        discount *= step.gamma
        returns.append(total + discount * bootstrap(theta_lookup(j), j))
        if step.terminal:
            break
    while len(returns) < z - t:
        returns.append(returns[-1])
    partial = sum(lam ** n * value for n, value in enumerate(returns[:-1]))
    return (1.0 - lam) * partial + lam ** (z - t - 1) * returns[-1]


def _offline_targets(traj, start, stop, theta, lam):
    """Lambda-returns of one episode with every bootstrap on ``theta``."""
    targets = np.zeros(stop - start)
    following = 0.0
    for k in range(stop - 1, start - 1, -1):
        step = traj[k]
        if step.terminal:
            targets[k - start] = step.reward
        else:
            value_next = dot(theta, step.phi_next)
            if k == stop - 1:
                following = value_next
            targets[k - start] = step.reward + step.gamma * (
                (1.0 - lam) * value_next + lam * following)
        following = targets[k - start]
    return targets


def offline_lambda_return_algorithm(episode, alpha, lam, theta_init):
    """Weights at the end of one episode of the offline algorithm.

    Every visited state is updated toward its lambda-return, computed with
    the episode's initial weights; nothing changes before the episode ends.

    """
    _require_complete(episode)
    if len(_episode_bounds(episode)) != 1:
        raise HorizonError('expected a single episode')
    return _offline_episode(episode, 0, len(episode), alpha, lam,
                            np.array(theta_init, dtype=np.float64))


def _offline_episode(traj, start, stop, alpha, lam, theta):
    targets = _offline_targets(traj, start, stop, theta, lam)
    out = theta.copy()
    for k in range(start, stop):
        x = traj[k].phi
        out += (alpha * (targets[k - start] - dot(out, x))) * as_dense(x)
    return out


def offline_lambda_return_history(traj, alpha, lam, theta_init):
    """Per-step weights of the offline algorithm.

    Constant within an episode; the update lands on the step that completes
    it. An unfinished final episode is never updated.

    """
    theta = np.array(theta_init, dtype=np.float64)
    history = np.empty((len(traj) + 1, len(theta)))
    history[0] = theta
    for start, stop in _episode_bounds(traj):
        history[start + 1:stop] = theta
        if traj[stop - 1].terminal:
            theta = _offline_episode(traj, start, stop, alpha, lam, theta)
        history[stop] = theta
    return history


def accumulating_trace_nonrecursive(traj, t, lam):
    """sum_{k} (gamma lambda)^(t-1-k) phi_k over the episode up to step t-1.

    The decay between two steps uses the gamma of the later one.

    """
    if not 0 < t <= len(traj):
        raise HorizonError('t {} outside [1, {}]'.format(t, len(traj)))
    start, _ = _episode_of(traj, t - 1)
    trace = np.zeros(traj.num_features)
    for k in range(start, t):
        decay = 1.0
        for j in range(k + 1, t):
            decay *= traj[j].gamma * lam
        trace += decay * as_dense(traj[k].phi)
    return trace


def prop2_condition_holds(traj, lam=1.0):
    """Whether e_{t-1}[i] phi_t[i] = 0 for every feature and step.

    ``e`` is the accumulating trace, cleared at each episode start. When
    this holds, accumulate, replace and true online TD(lambda) produce the
    same weights.

    """
    trace = np.zeros(traj.num_features)
    for step in traj:
        phi = as_dense(step.phi)
        if np.any(trace * phi != 0.0):
            return False
        trace = step.gamma * lam * trace + phi
        if step.terminal:
            trace[:] = 0.0
    return True


@dataclass(frozen=True, eq=False)
class TheoremOneDiagnostics:
    """Step-size independent terms and the accumulate/forward-view gap."""

    delta_terms: np.ndarray
    ratio: float
    theta_td: np.ndarray
    theta_lambda: np.ndarray


def theorem1_diagnostics(traj, alpha, lam, theta_init):
    """Compare accumulate TD(lambda) with the online lambda-return algorithm.

    ``delta_terms[i]`` is (G_i^{lambda|t} - theta_0 . phi_i) phi_i with every
    bootstrap on theta_0 and t the final step; ``ratio`` is
    ||theta_td - theta_lambda|| / ||theta_td - theta_0|| at step t.

    """
    theta_init = np.array(theta_init, dtype=np.float64)
    size = len(traj)
    if size == 0:
        raise DegenerateInputError('empty trajectory')

    def frozen(_):
        return theta_init

    start, stop = _episode_bounds(traj)[-1]
    if start != 0:
        raise ConfigurationError('theorem diagnostics apply to one episode')
    delta_terms = np.array([
        (interim_lambda_return(traj, i, stop, frozen, lam) -
         dot(theta_init, traj[i].phi)) * as_dense(traj[i].phi)
        for i in range(stop)])
    if not np.any(delta_terms.sum(axis=0)):
        raise DegenerateInputError('the step-size independent terms sum to 0')
    history, _ = replay(AccumulateTD(len(theta_init), alpha, lam, theta_init),
                        traj, divergence_limit=np.inf)
    theta_td = history[-1]
    theta_lambda = online_lambda_return_algorithm(traj, alpha, lam,
                                                  theta_init).final
    denominator = np.linalg.norm(theta_td - theta_init)
    if denominator == 0.0:
        raise DegenerateInputError('accumulate TD(lambda) did not move the '
                                   'weights')
    ratio = float(np.linalg.norm(theta_td - theta_lambda) / denominator)
    return TheoremOneDiagnostics(delta_terms, ratio, theta_td, theta_lambda)


def theorem1_ratio(traj, alpha, lam, theta_init):
    """Relative gap between accumulate TD(lambda) and the forward view."""
    return theorem1_diagnostics(traj, alpha, lam, theta_init).ratio


def state_weighting(mrp, weighting='stationary'):
    """State weights for value-error objectives."""
    if weighting == 'stationary':
        return on_policy_distribution(mrp)
    if weighting == 'uniform':
        return uniform_distribution(mrp)
    raise ConfigurationError('unknown weighting {!r} (choose from {})'.format(
        weighting, ', '.join(WEIGHTINGS)))


def lms_solution(mrp, representation, weighting='stationary'):
    """Least mean squares weights and their weighted squared error.

    Solves the weighted normal equations, falling back on the
    pseudo-inverse when they are rank deficient.

    """
    d = state_weighting(mrp, weighting)
    values = true_values(mrp)
    table = representation.table
    weighted = table.T * d
    gram = weighted @ table
    rhs = weighted @ values
    if np.linalg.matrix_rank(gram) == gram.shape[0]:
        theta_star = np.linalg.solve(gram, rhs)
    else:
        theta_star = np.linalg.pinv(gram) @ rhs
    mse_star = float(d @ (values - table @ theta_star) ** 2)
    return theta_star, mse_star


def lms_for_task(mrp, kind, seed=0, weighting='stationary'):
    """``(representation, theta_star, mse_star)`` for a representation kind."""
    representation = build_representation(kind, mrp, seed)
    theta_star, mse_star = lms_solution(mrp, representation, weighting)
    return representation, theta_star, mse_star
