"""Abstract base learner classes."""
from abc import ABCMeta, abstractmethod

import numpy as np

from ..core import ConfigurationError, dimension, stack_action_features, zeros


class Learner(metaclass=ABCMeta):
    """Abstract base class for linear TD learners.

    Learners are expected to set the ``variant`` property and implement a
    single method, ``_update()``. The weight vector is exposed read-only
    through ``theta``; ``t`` counts every processed step and is never reset.

    """

    def __init__(self, n, alpha, lam, theta_init=None):
        if n < 1:
            raise ConfigurationError('weight dimension must be positive')
        if not 0.0 <= lam <= 1.0:
            raise ConfigurationError('lambda {} outside [0, 1]'.format(lam))
        if alpha < 0:
            raise ConfigurationError('alpha must be non-negative')
        self.alpha = float(alpha)
        self.lam = float(lam)
        if theta_init is None:
            self._theta = np.zeros(n)
        else:
            self._theta = np.array(theta_init, dtype=np.float64)
            if self._theta.shape != (n,):
                raise ConfigurationError('theta_init has length {}, expected '
                                         '{}'.format(len(self._theta), n))
        self.trace = np.zeros(n)
        self.v_old = 0.0
        self.t = 0

    def __repr__(self):
        return '{}(n={}, alpha={}, lam={})'.format(
            type(self).__name__, len(self._theta), self.alpha, self.lam)

    @property
    @abstractmethod
    def variant(self):
        """Registry name of this learner."""

    @property
    def theta(self):
        """Read-only view of the current weights."""
        view = self._theta.view()
        view.setflags(write=False)
        return view

    @property
    def n(self):
        """Length of the weight vector."""
        return len(self._theta)

    def start_episode(self):
        """Clear the trace and the stored old value."""
        self.trace[:] = 0.0
        self.v_old = 0.0

    @abstractmethod
    def _update(self, transition):
        """Apply the variant's update for ``transition`` in place."""

    def step(self, transition):
        """Process one transition; after a terminal one a new episode starts.

        Return ``self``.

        """
        self._update(transition)
        self.t += 1
        if transition.terminal:
            self.start_episode()
        return self


class PredictionLearner(Learner):
    """Abstract base class for state-value learners."""

    def _check(self, transition):
        if dimension(transition.phi) != self.n:
            raise ConfigurationError('feature dimension {} does not match '
                                     'weight dimension {}'.format(
                                         dimension(transition.phi), self.n))


class ControlLearner(Learner):
    """Abstract base class for action-value learners.

    Weights are laid out in ``num_actions`` blocks of ``n`` state features;
    ``q_old`` is an alias of the stored old value.

    """

    def __init__(self, n, num_actions, alpha, lam, epsilon=0.0,
                 theta_init=None):
        if num_actions < 1:
            raise ConfigurationError('at least one action is required')
        if not 0.0 <= epsilon <= 1.0:
            raise ConfigurationError('epsilon {} outside [0, 1]'
                                     .format(epsilon))
        super(ControlLearner, self).__init__(n * num_actions, alpha, lam,
                                             theta_init)
        self.num_actions = num_actions
        self.num_features = n
        self.epsilon = float(epsilon)

    @property
    def q_old(self):
        """Stored Q value of the previous step's bootstrap."""
        return self.v_old

    def psi(self, phi, action):
        """State-action features of ``action`` taken in ``phi``."""
        return stack_action_features(phi, action, self.num_actions)

    def psi_pair(self, transition):
        """``(psi, psi_next)`` for an annotated transition."""
        if transition.action is None:
            raise ConfigurationError('control learners need transitions '
                                     'annotated with actions')
        psi = self.psi(transition.phi, transition.action)
        if transition.terminal:
            return psi, zeros(self.n)
        if transition.next_action is None:
            raise ConfigurationError('non-terminal control transitions need '
                                     'the next action')
        return psi, self.psi(transition.phi_next, transition.next_action)
