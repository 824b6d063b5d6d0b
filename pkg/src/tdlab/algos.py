"""Backward-view TD(lambda), Sarsa(lambda) and Q(lambda) learners.

Every update costs O(n) per step. The step functions mutate the learner's
weights and trace in place and return the learner; the learner classes are
thin wrappers that route transitions to them.

"""
import logging

import numpy as np

from .base.learner import ControlLearner, PredictionLearner
from .core import (ConfigurationError, SparseFeatures, Trajectory, Transition,
                   action_values, as_dense, dot, is_binary, zeros)
from .envs import (Mdp, sample_action_step, sample_initial, sample_step,
                   state_features)

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e100
DEFAULT_EPISODE_CAP = 100000
REPLACE_BINARY_ONLY = ('replacing traces are only defined for binary '
                       'features (all values 0 or 1)')


class EpisodeLengthError(RuntimeError):
    """An episodic task did not terminate within the step cap."""

    def __init__(self, cap):
        super(EpisodeLengthError, self).__init__(cap)
        self.cap = cap

    def __str__(self):
        return 'Episode did not terminate within {} steps'.format(self.cap)


def _add(out, scale, phi):
    """out += scale * phi, for dense or sparse ``phi``."""
    if isinstance(phi, SparseFeatures):
        np.add.at(out, phi.indices, scale * phi.values)
    else:
        out += scale * phi


def _require(learner, variant):
    if learner.variant != variant:
        raise ConfigurationError('{} step applied to a {} learner'.format(
            variant, learner.variant))


def _accumulate_update(learner, x, x_next, reward, gamma):
    theta, trace = learner._theta, learner.trace
    delta = reward + gamma * dot(theta, x_next) - dot(theta, x)
    trace *= gamma * learner.lam
    _add(trace, 1.0, x)
    theta += learner.alpha * delta * trace


def _replace_update(learner, x, x_next, reward, gamma):
    if not is_binary(x):
        raise ConfigurationError(REPLACE_BINARY_ONLY)
    theta, trace = learner._theta, learner.trace
    delta = reward + gamma * dot(theta, x_next) - dot(theta, x)
    trace *= gamma * learner.lam
    if isinstance(x, SparseFeatures):
        trace[x.indices[x.values == 1.0]] = 1.0
    else:
        trace[x == 1.0] = 1.0
    theta += learner.alpha * delta * trace


def _dutch_trace(trace, x, alpha, decay):
    """e <- decay e + x - alpha decay (e . x) x"""
    overlap = dot(trace, x)
    trace *= decay
    _add(trace, 1.0 - alpha * decay * overlap, x)


def _true_online_update(learner, x, value_next, reward, gamma):
    """Dutch-trace update given the bootstrap value of the next input."""
    theta, trace, alpha = learner._theta, learner.trace, learner.alpha
    value = dot(theta, x)
    delta = reward + gamma * value_next - value
    _dutch_trace(trace, x, alpha, gamma * learner.lam)
    correction = value - learner.v_old
    theta += alpha * (delta + correction) * trace
    _add(theta, -alpha * correction, x)
    learner.v_old = value_next


def accumulate_td_step(learner, transition):
    """Accumulating-trace TD(lambda) update.

    delta = R + gamma theta.phi' - theta.phi; e <- gamma lambda e + phi;
    theta <- theta + alpha delta e.

    """
    _require(learner, 'accumulate')
    _accumulate_update(learner, transition.phi, transition.phi_next,
                       transition.reward, transition.gamma)
    return learner


def replace_td_step(learner, transition):
    """Replacing-trace TD(lambda) update; active features reset to 1."""
    _require(learner, 'replace')
    _replace_update(learner, transition.phi, transition.phi_next,
                    transition.reward, transition.gamma)
    return learner


def true_online_td_step(learner, transition):
    """True online TD(lambda) update with a dutch trace.

    ``v_old`` is taken from the weights before the update, as is the value
    of ``phi_next`` it is replaced with.

    """
    _require(learner, 'true-online')
    value_next = dot(learner._theta, transition.phi_next)
    _true_online_update(learner, transition.phi, value_next,
                        transition.reward, transition.gamma)
    return learner


def true_online_td_alpha_t_step(learner, transition, alpha_t):
    """True online TD(lambda) with a time-dependent step-size ``alpha_t``.

    The trace ``e+`` absorbs the step-size, and the update is driven by the
    modified TD error R + gamma V' - V_old.

    """
    _require(learner, 'true-online-alpha-t')
    theta, trace = learner._theta, learner.trace
    x, gamma = transition.phi, transition.gamma
    value = dot(theta, x)
    value_next = dot(theta, transition.phi_next)
    modified_delta = transition.reward + gamma * value_next - learner.v_old
    decay = gamma * learner.lam
    overlap = dot(trace, x)
    trace *= decay
    _add(trace, alpha_t * (1.0 - decay * overlap), x)
    theta += modified_delta * trace
    _add(theta, -alpha_t * (value - learner.v_old), x)
    learner.v_old = value_next
    return learner


def tabular_true_online_td_step(learner, state, transition):
    """True online TD(lambda) for one-hot features indexed by ``state``.

    e(S) becomes the weighted average (1 - alpha) e(S) + 1 of an
    accumulating and a replacing trace; the whole trace decays after the
    value sweep and V(S) receives the -alpha dV correction last.

    """
    _require(learner, 'tabular-true-online')
    values, trace, alpha = learner._theta, learner.trace, learner.alpha
    gamma = transition.gamma
    change = values[state] - learner.v_old
    value_next = dot(values, transition.phi_next)
    learner.v_old = value_next
    delta = transition.reward + gamma * value_next - values[state]
    trace[state] = (1.0 - alpha) * trace[state] + 1.0
    values += alpha * (delta + change) * trace
    trace *= gamma * learner.lam
    values[state] -= alpha * change
    return learner


def epsilon_greedy(theta, phi_s, num_actions, epsilon, rng):
    """Return ``(action, greedy)`` for an epsilon-greedy policy.

    Ties for the maximum go to the lowest action index; ``greedy`` tells
    whether the chosen action attains the maximum, so an exploratory
    action that ties it counts as greedy.

    """
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigurationError('epsilon {} outside [0, 1]'.format(epsilon))
    q = action_values(theta, phi_s, num_actions)
    if epsilon > 0.0 and rng.random() < epsilon:
        action = rng.integers(num_actions)
    else:
        action = int(np.argmax(q))
    return action, bool(q[action] == q.max())


def accumulate_sarsa_step(learner, psi, psi_next, reward, gamma):
    """Sarsa(lambda) with an accumulating trace on state-action features."""
    _require(learner, 'sarsa-accumulate')
    _accumulate_update(learner, psi, psi_next, reward, gamma)
    return learner


def replace_sarsa_step(learner, psi, psi_next, reward, gamma):
    """Sarsa(lambda) with a replacing trace on state-action features."""
    _require(learner, 'sarsa-replace')
    _replace_update(learner, psi, psi_next, reward, gamma)
    return learner


def true_online_sarsa_step(learner, psi, psi_next, reward, gamma):
    """True online Sarsa(lambda); ``psi_next`` is zero after termination."""
    _require(learner, 'true-online-sarsa')
    _true_online_update(learner, psi, dot(learner._theta, psi_next), reward,
                        gamma)
    return learner


def true_online_watkins_q_step(learner, psi, psi_star_next, reward,
                               next_action_greedy, gamma):
    """True online Watkins's Q(lambda).

    Bootstraps on the greedy action's features ``psi_star_next`` and clears
    the trace after the weight update when the next action is not greedy.

    """
    _require(learner, 'true-online-watkins-q')
    _true_online_update(learner, psi, dot(learner._theta, psi_star_next),
                        reward, gamma)
    if not next_action_greedy:
        learner.trace[:] = 0.0
    return learner


class AccumulateTD(PredictionLearner):
    """TD(lambda) with accumulating traces."""

    variant = 'accumulate'

    def _update(self, transition):
        self._check(transition)
        accumulate_td_step(self, transition)


class ReplaceTD(PredictionLearner):
    """TD(lambda) with replacing traces (binary features only)."""

    variant = 'replace'

    def _update(self, transition):
        self._check(transition)
        replace_td_step(self, transition)


class TrueOnlineTD(PredictionLearner):
    """True online TD(lambda)."""

    variant = 'true-online'

    def _update(self, transition):
        self._check(transition)
        true_online_td_step(self, transition)


class TrueOnlineTDAlphaT(PredictionLearner):
    """True online TD(lambda) driven by a step-size schedule.

    ``schedule`` maps the global step counter to alpha_t; without one the
    step-size is the constant ``alpha``.

    """

    variant = 'true-online-alpha-t'

    def __init__(self, n, alpha, lam, theta_init=None, schedule=None):
        super(TrueOnlineTDAlphaT, self).__init__(n, alpha, lam, theta_init)
        self.schedule = schedule

    def alpha_t(self):
        """Step-size for the current step."""
        if self.schedule is None:
            return self.alpha
        return float(self.schedule(self.t))

    def _update(self, transition):
        self._check(transition)
        true_online_td_alpha_t_step(self, transition, self.alpha_t())


class TabularTrueOnlineTD(PredictionLearner):
    """True online TD(lambda) specialised to one-hot features."""

    variant = 'tabular-true-online'

    def _update(self, transition):
        self._check(transition)
        active = np.flatnonzero(as_dense(transition.phi))
        if len(active) != 1 or as_dense(transition.phi)[active[0]] != 1.0:
            raise ConfigurationError('tabular learner needs one-hot features')
        tabular_true_online_td_step(self, int(active[0]), transition)


class AccumulateSarsa(ControlLearner):
    """Sarsa(lambda) with accumulating traces."""

    variant = 'sarsa-accumulate'

    def _update(self, transition):
        psi, psi_next = self.psi_pair(transition)
        accumulate_sarsa_step(self, psi, psi_next, transition.reward,
                              transition.gamma)


class ReplaceSarsa(ControlLearner):
    """Sarsa(lambda) with replacing traces."""

    variant = 'sarsa-replace'

    def _update(self, transition):
        psi, psi_next = self.psi_pair(transition)
        replace_sarsa_step(self, psi, psi_next, transition.reward,
                           transition.gamma)


class TrueOnlineSarsa(ControlLearner):
    """True online Sarsa(lambda)."""

    variant = 'true-online-sarsa'

    def _update(self, transition):
        psi, psi_next = self.psi_pair(transition)
        true_online_sarsa_step(self, psi, psi_next, transition.reward,
                               transition.gamma)


class TrueOnlineWatkinsQ(ControlLearner):
    """True online Watkins's Q(lambda).

    The greedy flag recorded with each transition decides the trace reset,
    so replaying a recorded trajectory reproduces the run that produced it.

    """

    variant = 'true-online-watkins-q'

    def greedy_next(self, phi_next, next_action=None):
        """State-action features of the greedy action in ``phi_next``.

        ``next_action`` is kept when it ties for the maximum; otherwise the
        lowest maximizing index wins.

        """
        q = action_values(self._theta, phi_next, self.num_actions)
        if next_action is None or q[next_action] != q.max():
            next_action = int(np.argmax(q))
        return self.psi(phi_next, next_action)

    def _update(self, transition):
        psi, _ = self.psi_pair(transition)
        if transition.terminal:
            psi_star = zeros(self.n)
        else:
            psi_star = self.greedy_next(transition.phi_next,
                                        transition.next_action)
        true_online_watkins_q_step(self, psi, psi_star, transition.reward,
                                   transition.next_greedy, transition.gamma)


LEARNERS = {cls.variant: cls for cls in (
    AccumulateTD, ReplaceTD, TrueOnlineTD, TrueOnlineTDAlphaT,
    TabularTrueOnlineTD, AccumulateSarsa, ReplaceSarsa, TrueOnlineSarsa,
    TrueOnlineWatkinsQ)}
PREDICTION_VARIANTS = tuple(name for name, cls in LEARNERS.items()
                            if issubclass(cls, PredictionLearner))
CONTROL_VARIANTS = tuple(name for name, cls in LEARNERS.items()
                         if issubclass(cls, ControlLearner))


def make_learner(variant, n, alpha, lam, num_actions=None, epsilon=0.0,
                 theta_init=None):
    """Instantiate the learner registered as ``variant``.

    ``n`` is the number of state features; control variants size their
    weights as ``n * num_actions``.

    """
    try:
        cls = LEARNERS[variant]
    except KeyError:
        raise ConfigurationError('unknown variant {!r} (choose from {})'
                                 .format(variant, ', '.join(LEARNERS)))
    if issubclass(cls, ControlLearner):
        if num_actions is None:
            raise ConfigurationError('{} needs num_actions'.format(variant))
        return cls(n, num_actions, alpha, lam, epsilon, theta_init)
    return cls(n, alpha, lam, theta_init)


def _prediction_transition(env, representation, state, following, reward):
    terminal = following in env.terminal_states
    return Transition(state_features(representation, state), reward,
                      state_features(representation, following, terminal),
                      env.gamma, terminal, state, following)


def run_episode(learner, env, representation, policy=None, rng=None,
                max_steps=DEFAULT_EPISODE_CAP):
    """Run ``learner`` for one episode of ``env``.

    Prediction learners follow the dynamics of an ``Mrp``; control learners
    pick actions in an ``Mdp`` with ``policy(theta, phi, rng)`` returning
    ``(action, greedy)`` (epsilon-greedy with the learner's epsilon by
    default). Continuing tasks stop after ``max_steps``; an episodic task
    that has not terminated by then raises ``EpisodeLengthError``.

    Return ``(learner, trajectory)``.

    """
    if representation.n * getattr(learner, 'num_actions', 1) != learner.n:
        raise ConfigurationError('representation dimension {} does not match '
                                 'the learner'.format(representation.n))
    control = isinstance(learner, ControlLearner)
    if control != isinstance(env, Mdp):
        raise ConfigurationError('control learners need an Mdp, prediction '
                                 'learners an Mrp')
    if control and policy is None:
        def policy(theta, phi, generator):
            return epsilon_greedy(theta, phi, learner.num_actions,
                                  learner.epsilon, generator)
    learner.start_episode()
    state = sample_initial(env, rng)
    action = None
    if control:
        action, _ = policy(learner.theta,
                           state_features(representation, state), rng)
    steps = []
    while len(steps) < max_steps:
        if control:
            following, reward = sample_action_step(env, state, action, rng)
            terminal = following in env.terminal_states
            phi_next = state_features(representation, following, terminal)
            next_action, greedy = (None, True) if terminal else policy(
                learner.theta, phi_next, rng)
            transition = Transition(
                state_features(representation, state), reward, phi_next,
                env.gamma, terminal, state, following, action, next_action,
                greedy)
        else:
            following, reward = sample_step(env, state, rng)
            transition = _prediction_transition(env, representation, state,
                                                following, reward)
        learner.step(transition)
        steps.append(transition)
        if transition.terminal:
            break
        state = following
        action = transition.next_action
    else:
        if env.episodic:
            raise EpisodeLengthError(max_steps)
    return learner, Trajectory(steps, getattr(env, 'num_actions', 1))


def stream_transitions(mrp, representation, rng,
                       max_episode_steps=DEFAULT_EPISODE_CAP):
    """Yield prediction transitions forever, restarting after termination."""
    state = sample_initial(mrp, rng)
    length = 0
    while True:
        following, reward = sample_step(mrp, state, rng)
        transition = _prediction_transition(mrp, representation, state,
                                            following, reward)
        yield transition
        length += 1
        if transition.terminal:
            length = 0
            state = sample_initial(mrp, rng)
        elif length >= max_episode_steps and mrp.episodic:
            raise EpisodeLengthError(max_episode_steps)
        else:
            state = following


def sample_trajectory(mrp, representation, rng, steps=None, episodes=None,
                      max_episode_steps=DEFAULT_EPISODE_CAP):
    """Sample a prediction trajectory independently of any learner.

    Episodes are concatenated until ``steps`` transitions or ``episodes``
    complete episodes have been drawn, whichever comes first; a step budget
    may cut the last episode short.

    """
    if steps is None and episodes is None:
        raise ConfigurationError('sample_trajectory needs steps or episodes')
    if not mrp.episodic and steps is None:
        raise ConfigurationError('continuing tasks need a step budget')
    out = []
    finished = 0
    for transition in stream_transitions(mrp, representation, rng,
                                         max_episode_steps):
        if ((steps is not None and len(out) >= steps) or
                (episodes is not None and finished >= episodes)):
            break
        out.append(transition)
        finished += transition.terminal
    return Trajectory(out)


def replay(learner, trajectory, divergence_limit=DIVERGENCE_LIMIT):
    """Drive ``learner`` over a recorded trajectory.

    Return ``(history, diverged)`` where ``history[t]`` is theta after ``t``
    steps. Once any weight exceeds ``divergence_limit`` in magnitude or is
    not finite, learning stops and the remaining rows repeat the last
    weights that were still within the limit.

    """
    history = np.empty((len(trajectory) + 1, learner.n))
    history[0] = learner.theta
    diverged = False
    with np.errstate(over='ignore', invalid='ignore'):
        for t, transition in enumerate(trajectory, start=1):
            learner.step(transition)
            theta = learner.theta
            if not np.all(np.abs(theta) <= divergence_limit):
                logger.debug('%s diverged at step %d', learner.variant, t)
                history[t:] = history[t - 1]
                diverged = True
                break
            history[t] = theta
    return history, diverged


def theta_history(learner, trajectory):
    """Weights after every step of ``trajectory`` (no divergence check)."""
    history, _ = replay(learner, trajectory, divergence_limit=np.inf)
    return history

