from unittest import TestCase
from unittest.mock import patch

import numpy as np

from tdlab.base.learner import ControlLearner, Learner
from tdlab.core import ConfigurationError, Transition, features, zeros


class TestLearner(TestCase):
    @patch.multiple(Learner, __abstractmethods__=set())
    def setUp(self):
        self.learner = Learner(3, 0.1, 0.5)

    def test_Learner(self):
        self.assertRaises(TypeError, Learner, 3, 0.1, 0.5)

    def test___init__(self):
        self.assertRaises(ConfigurationError, Learner.__init__,
                          self.learner, 0, 0.1, 0.5)
        self.assertRaises(ConfigurationError, Learner.__init__,
                          self.learner, 3, 0.1, 1.5)
        self.assertRaises(ConfigurationError, Learner.__init__,
                          self.learner, 3, -0.1, 0.5)
        self.assertRaises(ConfigurationError, Learner.__init__,
                          self.learner, 3, 0.1, 0.5, [1.0, 2.0])

    def test_theta(self):
        np.testing.assert_array_equal(np.zeros(3), self.learner.theta)
        with self.assertRaises(ValueError):
            self.learner.theta[0] = 1.0
        self.assertEqual(3, self.learner.n)

    def test_step(self):
        phi = features([1, 0, 0])
        self.learner.trace[:] = 1.0
        self.learner.v_old = 2.0
        self.learner.step(Transition(phi, 0.0, phi, 1.0))
        self.assertEqual(1, self.learner.t)
        self.assertEqual(2.0, self.learner.v_old)
        self.learner.step(Transition(phi, 0.0, zeros(3), 1.0, True))
        self.assertEqual(2, self.learner.t)
        self.assertEqual(0.0, self.learner.v_old)
        np.testing.assert_array_equal(np.zeros(3), self.learner.trace)

    def test___repr__(self):
        self.assertEqual('Learner(n=3, alpha=0.1, lam=0.5)',
                         repr(self.learner))


class TestControlLearner(TestCase):
    @patch.multiple(ControlLearner, __abstractmethods__=set())
    def setUp(self):
        self.learner = ControlLearner(2, 3, 0.1, 0.5, epsilon=0.1)

    def test___init__(self):
        self.assertEqual(6, self.learner.n)
        self.assertEqual(2, self.learner.num_features)
        self.assertRaises(ConfigurationError, ControlLearner.__init__,
                          self.learner, 2, 0, 0.1, 0.5)
        self.assertRaises(ConfigurationError, ControlLearner.__init__,
                          self.learner, 2, 3, 0.1, 0.5, 1.5)

    def test_q_old(self):
        self.learner.v_old = 4.0
        self.assertEqual(4.0, self.learner.q_old)

    def test_psi_pair(self):
        phi = features([1, 2])
        psi, psi_next = self.learner.psi_pair(
            Transition(phi, 0.0, phi, 1.0, action=0, next_action=2))
        np.testing.assert_array_equal([1, 2, 0, 0, 0, 0], psi)
        np.testing.assert_array_equal([0, 0, 0, 0, 1, 2], psi_next)
        _, psi_next = self.learner.psi_pair(
            Transition(phi, 0.0, zeros(2), 1.0, True, action=1))
        np.testing.assert_array_equal(np.zeros(6), psi_next)

    def test_psi_pair_errors(self):
        phi = features([1, 2])
        self.assertRaises(ConfigurationError, self.learner.psi_pair,
                          Transition(phi, 0.0, phi, 1.0))
        self.assertRaises(ConfigurationError, self.learner.psi_pair,
                          Transition(phi, 0.0, phi, 1.0, action=1))
