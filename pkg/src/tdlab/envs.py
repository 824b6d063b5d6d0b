"""Environment generators and feature representations.

States are indexed from 0. Terminal states self-loop with reward 0 and are
represented by the all-zero feature vector.

"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, SparseFeatures, features, zeros
from .rng import MASK64, Rng, mix64

logger = logging.getLogger(__name__)

CANONICAL_TASKS = ('random-walk-10', 'one-state', 'two-state')
REPRESENTATIONS = ('tabular', 'binary', 'random-normalized', 'aggregate',
                   'tile-coding')
ONE_STATE_CONTINUE = 0.9
RANDOM_NORMALIZED_FEATURES = 5
STATIONARY_TOLERANCE = 1e-12
STATIONARY_MAX_ITERATIONS = 1000000


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, iterations, residual):
        super(ConvergenceError, self).__init__(iterations, residual)
        self.iterations = iterations
        self.residual = residual

    def __str__(self):
        return ('Did not converge after {} iterations (residual {:.3e})'
                .format(self.iterations, self.residual))


def _readonly(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mrp:
    """Markov reward process: one implicit action per state."""

    transitions: np.ndarray
    rewards: np.ndarray
    sigma: float
    gamma: float
    terminal_states: frozenset = frozenset()
    initial: np.ndarray = None

    def __post_init__(self):
        transitions = _readonly(self.transitions)
        k = transitions.shape[0]
        if transitions.shape != (k, k):
            raise ConfigurationError('transition matrix must be square')
        if not np.allclose(transitions.sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ConfigurationError('transition rows must sum to 1')
        if self.sigma < 0:
            raise ConfigurationError('sigma must be non-negative')
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError('gamma must lie in [0, 1]')
        initial = (np.full(k, 1.0 / k) if self.initial is None
                   else self.initial)
        object.__setattr__(self, 'transitions', transitions)
        object.__setattr__(self, 'rewards', _readonly(self.rewards))
        object.__setattr__(self, 'initial', _readonly(initial))
        object.__setattr__(self, 'terminal_states',
                           frozenset(int(s) for s in self.terminal_states))

    @property
    def k(self):
        """Number of states, terminal states included."""
        return self.transitions.shape[0]

    @property
    def nonterminal(self):
        """Sorted indices of the non-terminal states."""
        return [s for s in range(self.k) if s not in self.terminal_states]

    @property
    def episodic(self):
        """Whether the process has terminal states."""
        return bool(self.terminal_states)

    def expected_rewards(self):
        """r_bar[s] = sum_s' P[s, s'] r_mean[s, s']."""
        return np.sum(self.transitions * self.rewards, axis=1)

    def __eq__(self, other):
        if not isinstance(other, Mrp):
            return NotImplemented
        return (np.array_equal(self.transitions, other.transitions) and
                np.array_equal(self.rewards, other.rewards) and
                np.array_equal(self.initial, other.initial) and
                (self.sigma, self.gamma, self.terminal_states) ==
                (other.sigma, other.gamma, other.terminal_states))

    __hash__ = object.__hash__


@dataclass(frozen=True, eq=False)
class Mdp:
    """Markov decision process with tensors indexed (state, action, next)."""

    transitions: np.ndarray
    rewards: np.ndarray
    sigma: float
    gamma: float
    terminal_states: frozenset = frozenset()
    initial: np.ndarray = None

    def __post_init__(self):
        transitions = _readonly(self.transitions)
        shape = transitions.shape
        if len(shape) != 3 or shape[0] != shape[2]:
            raise ConfigurationError('transition tensor must be k x |A| x k')
        if not np.allclose(transitions.sum(axis=2), 1.0, rtol=0, atol=1e-12):
            raise ConfigurationError('transition rows must sum to 1')
        if self.sigma < 0:
            raise ConfigurationError('sigma must be non-negative')
        k = transitions.shape[0]
        initial = (np.full(k, 1.0 / k) if self.initial is None
                   else self.initial)
        object.__setattr__(self, 'transitions', transitions)
        object.__setattr__(self, 'rewards', _readonly(self.rewards))
        object.__setattr__(self, 'initial', _readonly(initial))
        object.__setattr__(self, 'terminal_states',
                           frozenset(int(s) for s in self.terminal_states))

    @property
    def k(self):
        """Number of states, terminal states included."""
        return self.transitions.shape[0]

    @property
    def num_actions(self):
        """Number of actions available in every state."""
        return self.transitions.shape[1]

    @property
    def nonterminal(self):
        """Sorted indices of the non-terminal states."""
        return [s for s in range(self.k) if s not in self.terminal_states]

    @property
    def episodic(self):
        """Whether the process has terminal states."""
        return bool(self.terminal_states)

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (np.array_equal(self.transitions, other.transitions) and
                np.array_equal(self.rewards, other.rewards) and
                np.array_equal(self.initial, other.initial) and
                (self.sigma, self.gamma, self.terminal_states) ==
                (other.sigma, other.gamma, other.terminal_states))

    __hash__ = object.__hash__


@dataclass(frozen=True)
class TileCoderConfig:
    """Grid tile coder over signals normalized to [0, 1]."""

    num_tilings: int = 8
    bins_per_signal: int = 10
    signal_ranges: tuple = ((0.0, 1.0),)
    hash_size: int = 200000
    bias_unit: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'signal_ranges',
                           tuple((float(lo), float(hi))
                                 for lo, hi in self.signal_ranges))
        if self.num_tilings < 1 or self.bins_per_signal < 1:
            raise ConfigurationError('tilings and bins must be positive')
        if self.hash_size < self.num_tilings:
            raise ConfigurationError('hash_size must be at least num_tilings')
        if any(hi <= lo for lo, hi in self.signal_ranges):
            raise ConfigurationError('signal ranges need lo < hi')

    @property
    def n(self):
        """Feature dimension (hashed tiles plus the optional bias unit)."""
        return self.hash_size + (1 if self.bias_unit else 0)


@dataclass(frozen=True, eq=False)
class Representation:
    """A state -> feature map.

    Discrete kinds carry a ``table`` with one row per state (all-zero rows
    for terminal states); tile coding carries a ``coder`` config instead.

    """

    kind: str
    table: np.ndarray = None
    coder: TileCoderConfig = None

    def __post_init__(self):
        if self.kind not in REPRESENTATIONS:
            raise ConfigurationError('unknown representation {!r}'
                                     .format(self.kind))
        if self.table is not None:
            object.__setattr__(self, 'table', _readonly(self.table))

    @property
    def n(self):
        """Feature dimension."""
        if self.coder is not None:
            return self.coder.n
        return self.table.shape[1]

    @property
    def binary(self):
        """Whether every feature value is 0 or 1."""
        if self.coder is not None:
            return True
        return bool(np.all((self.table == 0.0) | (self.table == 1.0)))

    def features(self, state):
        """Feature vector of discrete state ``state``."""
        return self.table[state]

    def __eq__(self, other):
        if not isinstance(other, Representation):
            return NotImplemented
        return (self.kind == other.kind and self.coder == other.coder and
                (self.table is None) == (other.table is None) and
                (self.table is None or
                 np.array_equal(self.table, other.table)))

    __hash__ = object.__hash__


def _random_rows(k, b, rng):
    """b distinct successors per state, probabilities from sorted cuts."""
    transitions = np.zeros((k, k))
    rewards = np.zeros((k, k))
    for state in range(k):
        successors = rng.sample_without_replacement(k, b)
        cuts = np.sort(rng.random(b - 1))
        transitions[state, successors] = np.diff(
            np.concatenate(([0.0], cuts, [1.0])))
        rewards[state, successors] = rng.normal(size=b)
    return transitions, rewards


def generate_mrp(k, b, sigma, gamma, seed):
    """Random MRP ``(k, b, sigma)`` with no terminal states.

    Each state gets ``b`` successors drawn without replacement; their
    probabilities partition [0, 1] at ``b - 1`` sorted uniform cut points.
    Expected rewards are standard normal. The initial state is uniform.

    """
    if not 1 <= b <= k:
        raise ConfigurationError('branching factor exceeds states'
                                 if b > k else 'branching factor must be >= 1')
    transitions, rewards = _random_rows(k, b, Rng(seed))
    return Mrp(transitions, rewards, sigma, gamma)


def generate_mdp(k, b, num_actions, sigma, gamma, seed):
    """Random MDP built by repeating the MRP construction for each action."""
    if not 1 <= b <= k:
        raise ConfigurationError('branching factor exceeds states'
                                 if b > k else 'branching factor must be >= 1')
    if num_actions < 1:
        raise ConfigurationError('an MDP needs at least one action')
    rng = Rng(seed)
    transitions = np.zeros((k, num_actions, k))
    rewards = np.zeros((k, num_actions, k))
    for action in range(num_actions):
        transitions[:, action, :], rewards[:, action, :] = _random_rows(
            k, b, rng.split(action))
    return Mdp(transitions, rewards, sigma, gamma)


def _random_walk_10():
    # states 0..9 left to right, 10 is the terminal state left of state 0
    k = 11
    transitions = np.zeros((k, k))
    rewards = np.zeros((k, k))
    for state in range(10):
        left = 10 if state == 0 else state - 1
        right = min(state + 1, 9)
        transitions[state, left] += 0.7
        transitions[state, right] += 0.3
        rewards[state, left] = rewards[state, right] = 1.0
    transitions[10, 10] = 1.0
    initial = np.zeros(k)
    initial[9] = 1.0
    mrp = Mrp(transitions, rewards, 0.0, 1.0, frozenset({10}), initial)
    return mrp, build_representation('tabular', mrp)


def _one_state():
    transitions = np.array([[ONE_STATE_CONTINUE, 1.0 - ONE_STATE_CONTINUE],
                            [0.0, 1.0]])
    rewards = np.array([[0.0, 1.0], [0.0, 0.0]])
    mrp = Mrp(transitions, rewards, 0.0, 1.0, frozenset({1}), [1.0, 0.0])
    return mrp, build_representation('tabular', mrp)


def _two_state():
    transitions = np.array([[0.0, 1.0, 0.0],
                            [0.0, 0.0, 1.0],
                            [0.0, 0.0, 1.0]])
    rewards = np.array([[0.0, 2.0, 0.0],
                        [0.0, 0.0, 0.0],
                        [0.0, 0.0, 0.0]])
    mrp = Mrp(transitions, rewards, 0.0, 1.0, frozenset({2}), [1.0, 0.0, 0.0])
    return mrp, build_representation('aggregate', mrp)


_CANONICAL = {
    'random-walk-10': _random_walk_10,
    'one-state': _one_state,
    'two-state': _two_state,
}


def canonical_task(name):
    """Return ``(mrp, representation)`` for a named example task."""
    try:
        factory = _CANONICAL[name]
    except KeyError:
        raise ConfigurationError('unknown task {!r} (choose from {})'.format(
            name, ', '.join(CANONICAL_TASKS)))
    return factory()


def sample_initial(env, rng):
    """Draw a start state from the initial distribution."""
    return rng.categorical(env.initial)


def sample_step(mrp, state, rng):
    """Sample ``(next_state, reward)`` from non-terminal ``state``."""
    if state in mrp.terminal_states:
        raise ConfigurationError('cannot step from terminal state {}'
                                 .format(state))
    following = rng.categorical(mrp.transitions[state])
    reward = mrp.rewards[state, following]
    if mrp.sigma > 0:
        reward += mrp.sigma * rng.normal()
    return following, float(reward)


def sample_action_step(mdp, state, action, rng):
    """Sample ``(next_state, reward)`` after taking ``action`` in ``state``."""
    if state in mdp.terminal_states:
        raise ConfigurationError('cannot step from terminal state {}'
                                 .format(state))
    following = rng.categorical(mdp.transitions[state, action])
    reward = mdp.rewards[state, action, following]
    if mdp.sigma > 0:
        reward += mdp.sigma * rng.normal()
    return following, float(reward)


def _table(env, rows):
    table = np.zeros((env.k, rows.shape[1]))
    table[env.nonterminal] = rows
    return table


def build_representation(kind, env, seed=0):
    """Feature table of ``kind`` for the discrete environment ``env``.

    tabular
        one standard basis vector per non-terminal state
    binary
        the binary code of (index + 1), ceil(log2(k + 1)) bits, most
        significant bit first
    random-normalized
        five standard normal values per state, scaled to unit length
    aggregate
        a single feature that is 1 in every non-terminal state

    """
    count = len(env.nonterminal)
    if kind == 'tabular':
        rows = np.eye(count)
    elif kind == 'binary':
        width = int(math.ceil(math.log2(count + 1)))
        codes = np.arange(1, count + 1)
        rows = ((codes[:, None] >> np.arange(width - 1, -1, -1)) & 1)
        rows = rows.astype(np.float64)
    elif kind == 'random-normalized':
        rows = Rng(seed).normal(size=(count, RANDOM_NORMALIZED_FEATURES))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    elif kind == 'aggregate':
        rows = np.ones((count, 1))
    elif kind == 'tile-coding':
        raise ConfigurationError('tile coding applies to continuous signals, '
                                 'not to discrete states')
    else:
        raise ConfigurationError('unknown representation {!r}'.format(kind))
    return Representation(kind, _table(env, rows))


def _tile_hash(coordinates):
    value = 0
    for coordinate in coordinates:
        value = mix64(value ^ (int(coordinate) & MASK64))
    return value


def tile_code(signals, config):
    """Sparse binary features for the continuous ``signals``.

    Signals are clipped to their declared ranges and normalized to [0, 1].
    Tiling ``i`` is offset by ``i / num_tilings`` of a bin width. The tile
    coordinates of each tiling are hashed with the SplitMix64 mix into that
    tiling's share of ``hash_size``, so no two tilings collide and exactly
    ``num_tilings`` (+1 with the bias unit) features are active.

    """
    if len(signals) != len(config.signal_ranges):
        raise ConfigurationError('expected {} signals, got {}'.format(
            len(config.signal_ranges), len(signals)))
    scaled = []
    for value, (lo, hi) in zip(signals, config.signal_ranges):
        unit = (min(max(float(value), lo), hi) - lo) / (hi - lo)
        scaled.append(unit * config.bins_per_signal)
    share = config.hash_size // config.num_tilings
    indices = []
    for tiling in range(config.num_tilings):
        offset = tiling / config.num_tilings
        coordinates = [tiling] + [int(math.floor(x + offset)) for x in scaled]
        indices.append(tiling * share + _tile_hash(coordinates) % share)
    if config.bias_unit:
        indices.append(config.hash_size)
    return SparseFeatures(indices, np.ones(len(indices)), config.n)


class TileCoder:
    """Callable tile coder bound to one config."""

    def __init__(self, config):
        self.config = config

    @property
    def n(self):
        """Feature dimension."""
        return self.config.n

    def __call__(self, signals):
        return tile_code(signals, self.config)


def true_values(mrp):
    """Solve (I - gamma P) v = r_bar over the non-terminal states.

    Terminal states have value 0.

    """
    states = mrp.nonterminal
    values = np.zeros(mrp.k)
    if not states:
        return values
    block = mrp.transitions[np.ix_(states, states)]
    system = np.eye(len(states)) - mrp.gamma * block
    try:
        values[states] = np.linalg.solve(system,
                                         mrp.expected_rewards()[states])
    except np.linalg.LinAlgError as error:
        raise ConfigurationError('Bellman system is singular ({}); use '
                                 'gamma < 1 or a proper episodic chain'
                                 .format(error))
    return values


def stationary_distribution(mrp, tolerance=STATIONARY_TOLERANCE,
                            max_iterations=STATIONARY_MAX_ITERATIONS):
    """Stationary distribution d with d P = d, by power iteration.

    Iterates the lazy chain (I + P) / 2, which has the same stationary
    distribution and is aperiodic, starting from the uniform distribution.

    """
    transitions = mrp.transitions
    d = np.full(mrp.k, 1.0 / mrp.k)
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        d = 0.5 * (d + d @ transitions)
        d /= d.sum()
        residual = np.max(np.abs(d @ transitions - d))
        if residual <= tolerance:
            logger.debug('power iteration converged in %d iterations',
                         iteration)
            return d
    raise ConvergenceError(max_iterations, residual)


def visit_distribution(mrp):
    """Normalized expected visit counts per episode for an episodic MRP."""
    states = mrp.nonterminal
    block = mrp.transitions[np.ix_(states, states)]
    visits = np.linalg.solve((np.eye(len(states)) - block).T,
                             mrp.initial[states])
    d = np.zeros(mrp.k)
    d[states] = visits / visits.sum()
    return d


def on_policy_distribution(mrp):
    """State weighting for value-error objectives.

    The stationary distribution for continuing processes, the normalized
    expected visit counts for episodic ones.

    """
    if mrp.episodic:
        return visit_distribution(mrp)
    return stationary_distribution(mrp)


def uniform_distribution(mrp):
    """Uniform weighting over the non-terminal states."""
    d = np.zeros(mrp.k)
    d[mrp.nonterminal] = 1.0 / len(mrp.nonterminal)
    return d


def state_features(representation, state, terminal=False):
    """Feature vector of ``state``; the zero vector when ``terminal``."""
    if terminal:
        return zeros(representation.n)
    return features(representation.features(state))
