"""Shared numeric types and the feature algebra used by every other module.

Feature and weight vectors are plain 64-bit ``numpy`` arrays. Sparse feature
vectors (``SparseFeatures``) are accepted anywhere a dense one is and behave
identically under ``dot`` and ``as_dense``.

"""
from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Invalid or inconsistent experiment configuration."""

    def __str__(self):
        return 'Invalid configuration: {}'.format(
            ' '.join(str(arg) for arg in self.args))


class DimensionError(ConfigurationError):
    """Feature and weight vectors disagree on their dimension."""

    def __init__(self, expected, actual):
        super(DimensionError, self).__init__(
            'dimension mismatch (expected {}, got {})'.format(expected,
                                                              actual))
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True, eq=False)
class SparseFeatures:
    """Index/value-pair storage of a feature vector of dimension ``n``."""

    indices: np.ndarray
    values: np.ndarray
    n: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if indices.shape != values.shape:
            raise ConfigurationError('sparse indices and values differ in '
                                     'length')
        if indices.size and (indices.min() < 0 or indices.max() >= self.n):
            raise ConfigurationError('sparse index outside [0, {})'
                                     .format(self.n))
        indices.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, 'indices', indices)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.n

    def dot(self, weights):
        """Inner product with the dense vector ``weights``."""
        return float(np.dot(weights[self.indices], self.values))

    def toarray(self):
        """Dense copy of this vector."""
        out = np.zeros(self.n)
        np.add.at(out, self.indices, self.values)
        return out


def features(values):
    """Return ``values`` as an immutable dense feature vector."""
    out = np.array(values, dtype=np.float64).reshape(-1)
    out.setflags(write=False)
    return out


def zeros(n):
    """The all-zero feature vector of dimension ``n`` (a terminal state)."""
    return features(np.zeros(n))


def dimension(phi):
    """Reported dimension of a dense or sparse feature vector."""
    return phi.n if isinstance(phi, SparseFeatures) else len(phi)


def as_dense(phi):
    """Dense view of ``phi``; dense arrays are returned unchanged."""
    if isinstance(phi, SparseFeatures):
        return phi.toarray()
    return phi


def dot(w, phi):
    """Return ``w . phi``, the linear value estimate for features ``phi``.

    Raise ``DimensionError`` if the lengths differ.

    """
    if len(w) != dimension(phi):
        raise DimensionError(len(w), dimension(phi))
    if isinstance(phi, SparseFeatures):
        return phi.dot(w)
    return float(np.dot(w, phi))


def is_binary(phi):
    """Whether every entry of ``phi`` is exactly 0 or 1."""
    values = phi.values if isinstance(phi, SparseFeatures) else phi
    return bool(np.all((values == 0.0) | (values == 1.0)))


def stack_action_features(phi, action, num_actions):
    """Return the state-action vector psi of length ``n * num_actions``.

    Block ``action`` holds the values of ``phi``, every other block is zero.

    """
    if not 0 <= action < num_actions:
        raise ConfigurationError('action {} outside [0, {})'
                                 .format(action, num_actions))
    n = dimension(phi)
    if isinstance(phi, SparseFeatures):
        return SparseFeatures(phi.indices + action * n, phi.values,
                              n * num_actions)
    psi = np.zeros(n * num_actions)
    psi[action * n:(action + 1) * n] = phi
    psi.setflags(write=False)
    return psi


def action_values(theta, phi, num_actions):
    """Q(s, a) for every action, given state features ``phi``."""
    blocks = np.reshape(theta, (num_actions, -1))
    return blocks @ as_dense(phi)


@dataclass(frozen=True, eq=False)
class Transition:
    """One observed step ``(phi, R, phi')``.

    Control trajectories additionally record the action taken in ``phi``,
    the action selected in ``phi_next`` and whether that next action was
    greedy at selection time.

    """

    phi: np.ndarray
    reward: float
    phi_next: np.ndarray
    gamma: float
    terminal: bool = False
    state: int = None
    next_state: int = None
    action: int = None
    next_action: int = None
    next_greedy: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError('gamma {} outside [0, 1]'
                                     .format(self.gamma))
        if dimension(self.phi) != dimension(self.phi_next):
            raise DimensionError(dimension(self.phi),
                                 dimension(self.phi_next))
        if self.terminal and np.any(as_dense(self.phi_next)):
            raise ConfigurationError('terminal transitions need all-zero '
                                     'next features')

    def __eq__(self, other):
        if not isinstance(other, Transition):
            return NotImplemented
        return (np.array_equal(as_dense(self.phi), as_dense(other.phi)) and
                np.array_equal(as_dense(self.phi_next),
                               as_dense(other.phi_next)) and
                (self.reward, self.gamma, self.terminal, self.state,
                 self.next_state, self.action, self.next_action,
                 self.next_greedy) ==
                (other.reward, other.gamma, other.terminal, other.state,
                 other.next_state, other.action, other.next_action,
                 other.next_greedy))

    __hash__ = object.__hash__


@dataclass(frozen=True)
class Trajectory:
    """An ordered, immutable sequence of transitions.

    A trajectory may hold several consecutive episodes; each of them ends
    with exactly one terminal transition. The last episode may be open-ended
    (cut at a step cap) and a continuing trajectory has no terminal
    transition at all.

    """

    steps: tuple
    num_actions: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))
        dims = {dimension(step.phi) for step in self.steps}
        if len(dims) > 1:
            raise ConfigurationError('feature dimension varies within one '
                                     'trajectory: {}'.format(sorted(dims)))

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, index):
        return self.steps[index]

    @property
    def num_features(self):
        """Dimension of the state feature vectors."""
        return dimension(self.steps[0].phi) if self.steps else 0

    @property
    def complete(self):
        """Whether the trajectory ends on a terminal transition."""
        return bool(self.steps) and self.steps[-1].terminal

    @property
    def annotated(self):
        """Whether every step carries action annotations."""
        return all(step.action is not None and
                   (step.terminal or step.next_action is not None)
                   for step in self.steps)

    def episodes(self):
        """Split into per-episode trajectories at terminal transitions."""
        out, current = [], []
        for step in self.steps:
            current.append(step)
            if step.terminal:
                out.append(Trajectory(current, self.num_actions))
                current = []
        if current:
            out.append(Trajectory(current, self.num_actions))
        return out

    def greedy_flags(self):
        """Greedy flag of the action taken at each step.

        The first action of an episode has no selection-time reference and
        is reported greedy.

        """
        flags = []
        previous = None
        for step in self.steps:
            flags.append(True if previous is None or previous.terminal
                         else previous.next_greedy)
            previous = step
        return flags
