from dataclasses import replace
from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tdlab.algos import (make_learner, replay, run_episode,
                         sample_trajectory, theta_history)
from tdlab.core import (ConfigurationError, Trajectory, Transition,
                        action_values, as_dense, dot, features,
                        stack_action_features)
from tdlab.envs import (build_representation, canonical_task, generate_mdp,
                        generate_mrp)
from tdlab.oracle import (DegenerateInputError, HorizonError,
                          accumulating_trace_nonrecursive,
                          interim_lambda_return, lms_for_task, lms_solution,
                          n_step_return, offline_lambda_return,
                          offline_lambda_return_algorithm,
                          offline_lambda_return_history,
                          online_lambda_return_algorithm,
                          prop2_condition_holds, sarsa_forward_view,
                          state_weighting, theorem1_diagnostics,
                          theorem1_ratio, watkins_forward_view,
                          watkins_interim_target)
from tdlab.rng import Rng

TOLERANCE = 1e-8


def _one_state_episode():
    phi = features([1])
    return Trajectory([Transition(phi, 1.0, phi, 1.0),
                       Transition(phi, 0.0, features([0]), 1.0, True)])


def _chain_episode():
    # three distinct tabular states, never revisited
    eye = np.eye(3)
    return Trajectory([
        Transition(features(eye[0]), 1.0, features(eye[1]), 0.9),
        Transition(features(eye[1]), -1.0, features(eye[2]), 0.9),
        Transition(features(eye[2]), 2.0, features(np.zeros(3)), 0.9, True),
    ])


def _walk(episodes, seed=0):
    mrp, representation = canonical_task('random-walk-10')
    return sample_trajectory(mrp, representation, Rng(seed),
                             episodes=episodes)


def _control(variant, alpha, lam, seed=0):
    mdp = generate_mdp(6, 2, 2, 0.1, 0.9, seed)
    representation = build_representation('tabular', mdp)
    learner = make_learner(variant, 6, alpha, lam, epsilon=0.3,
                           num_actions=2)
    learner, trajectory = run_episode(learner, mdp, representation,
                                      rng=Rng(seed), max_steps=40)
    return trajectory


class TestErrors(TestCase):
    def test___str__(self):
        self.assertEqual('Horizon error: a', str(HorizonError('a')))
        self.assertEqual('Degenerate input: a',
                         str(DegenerateInputError('a')))


class TestReturns(TestCase):
    def setUp(self):
        self.episode = _one_state_episode()

        def lookup(_):
            return np.array([2.0])

        self.lookup = lookup

    def test_n_step_return(self):
        self.assertEqual(3.0, n_step_return(self.episode, 0, 1, self.lookup))
        self.assertEqual(1.0, n_step_return(self.episode, 0, 2, self.lookup))
        self.assertEqual(1.0, n_step_return(self.episode, 0, 3, self.lookup))
        self.assertEqual(0.0, n_step_return(self.episode, 1, 1, self.lookup))
        self.assertRaises(HorizonError, n_step_return, self.episode, 0, 0,
                          self.lookup)

    def test_n_step_return_beyond_data(self):
        open_ended = Trajectory(self.episode[:1])
        self.assertRaises(HorizonError, n_step_return, open_ended, 0, 2,
                          self.lookup)

    def test_interim_lambda_return(self):
        self.assertEqual(2.0, interim_lambda_return(self.episode, 0, 2,
                                                    self.lookup, 0.5))
        self.assertEqual(3.0, interim_lambda_return(self.episode, 0, 2,
                                                    self.lookup, 0.0))
        self.assertEqual(1.0, interim_lambda_return(self.episode, 0, 2,
                                                    self.lookup, 1.0))
        self.assertEqual(3.0, interim_lambda_return(self.episode, 0, 1,
                                                    self.lookup, 1.0))
        self.assertRaises(HorizonError, interim_lambda_return, self.episode,
                          1, 1, self.lookup, 0.5)
        self.assertRaises(HorizonError, interim_lambda_return, self.episode,
                          0, 3, self.lookup, 0.5)

    def test_offline_lambda_return(self):
        self.assertEqual(2.0, offline_lambda_return(self.episode, 0,
                                                    self.lookup, 0.5))
        self.assertRaises(HorizonError, offline_lambda_return,
                          Trajectory(self.episode[:1]), 0, self.lookup, 0.5)


class TestInterimRecursion(TestCase):
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1000), st.floats(0.0, 1.0), st.integers(0, 8),
           st.integers(1, 3))
    def test_telescoping(self, seed, lam, k, span):
        mrp = generate_mrp(5, 2, 0.1, 0.9, seed)
        representation = build_representation('tabular', mrp)
        trajectory = sample_trajectory(mrp, representation, Rng(seed),
                                       steps=12)
        thetas = Rng(seed).split(1).random((13, 5))

        def lookup(j):
            return thetas[j]

        h = k + span
        step = trajectory[h]
        modified = (step.reward + step.gamma * dot(thetas[h], step.phi_next)
                    - dot(thetas[h - 1], step.phi))
        difference = (interim_lambda_return(trajectory, k, h + 1, lookup,
                                            lam) -
                      interim_lambda_return(trajectory, k, h, lookup, lam))
        self.assertAlmostEqual((lam * step.gamma) ** (h - k) * modified,
                               difference, delta=1e-11)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.01, 0.5), st.floats(0.0, 1.0), st.integers(0, 1000))
    def test_modified_td_error(self, alpha, lam, seed):
        learner = make_learner('true-online', 10, alpha, lam)
        previous = None
        for step in _walk(1, seed):
            theta = np.array(learner.theta)
            value = dot(theta, step.phi)
            bootstrap = step.reward + step.gamma * dot(theta, step.phi_next)
            if previous is not None:
                old = dot(previous, step.phi)
                self.assertAlmostEqual(old, learner.v_old, delta=1e-12)
                self.assertAlmostEqual(value - old,
                                       (bootstrap - learner.v_old) -
                                       (bootstrap - value), delta=1e-12)
            learner.step(step)
            previous = theta


class TestOnlineLambdaReturn(TestCase):
    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.01, 0.5), st.floats(0.0, 1.0),
           st.integers(0, 1000))
    def test_matches_true_online(self, alpha, lam, seed):
        trajectory = _walk(2, seed)
        run = online_lambda_return_algorithm(trajectory, alpha, lam,
                                             np.zeros(10))
        learner = make_learner('true-online', 10, alpha, lam)
        np.testing.assert_allclose(run.theta_history,
                                   theta_history(learner, trajectory),
                                   rtol=0, atol=TOLERANCE)

    def test_intermediate(self):
        trajectory = _walk(2)
        run = online_lambda_return_algorithm(trajectory, 0.1, 0.8,
                                             np.zeros(10))
        for t in (1, len(trajectory) // 2, len(trajectory)):
            rows = run.intermediate(t)
            np.testing.assert_allclose(run.theta_history[t], rows[-1],
                                       rtol=0, atol=TOLERANCE)
        self.assertRaises(HorizonError, run.intermediate, 0)
        self.assertEqual(len(trajectory) + 1, len(run))

    def test_offline_agrees_at_episode_end(self):
        episode = _walk(1)
        theta_init = np.linspace(0, 1, 10)
        online = online_lambda_return_algorithm(episode, 0.1, 1.0,
                                                theta_init).final
        offline = offline_lambda_return_algorithm(episode, 0.1, 1.0,
                                                  theta_init)
        np.testing.assert_allclose(online, offline, rtol=0, atol=TOLERANCE)

    def test_offline_lambda_return_algorithm(self):
        final = offline_lambda_return_algorithm(_one_state_episode(), 0.5,
                                                1.0, [0.0])
        np.testing.assert_allclose([0.25], final)
        self.assertRaises(HorizonError, offline_lambda_return_algorithm,
                          _walk(2), 0.1, 0.5, np.zeros(10))

    def test_offline_lambda_return_history(self):
        trajectory = _walk(2)
        history = offline_lambda_return_history(trajectory, 0.1, 0.5,
                                                np.zeros(10))
        stop = next(index + 1 for index, step in enumerate(trajectory)
                    if step.terminal)
        np.testing.assert_array_equal(np.zeros((stop, 10)), history[:stop])
        self.assertTrue(np.any(history[stop]))
        np.testing.assert_array_equal(
            offline_lambda_return_algorithm(Trajectory(trajectory[:stop]),
                                            0.1, 0.5, np.zeros(10)),
            history[stop])


class TestTraces(TestCase):
    def test_accumulating_trace_nonrecursive(self):
        mrp = generate_mrp(5, 2, 0.1, 0.9, 2)
        representation = build_representation('tabular', mrp)
        trajectory = sample_trajectory(mrp, representation, Rng(1), steps=15)
        learner = make_learner('accumulate', 5, 0.1, 0.8)
        for t, step in enumerate(trajectory, start=1):
            learner.step(step)
            np.testing.assert_allclose(
                learner.trace,
                accumulating_trace_nonrecursive(trajectory, t, 0.8),
                rtol=0, atol=1e-12)
        self.assertRaises(HorizonError, accumulating_trace_nonrecursive,
                          trajectory, 0, 0.8)

    def test_prop2_condition_holds(self):
        self.assertTrue(prop2_condition_holds(_chain_episode()))
        self.assertFalse(prop2_condition_holds(_one_state_episode()))

    def test_no_revisit_equivalence(self):
        episode = _chain_episode()
        histories = [theta_history(make_learner(variant, 3, 0.3, 0.7),
                                   episode)
                     for variant in ('accumulate', 'replace', 'true-online')]
        np.testing.assert_allclose(histories[0], histories[1], rtol=0,
                                   atol=1e-12)
        np.testing.assert_allclose(histories[0], histories[2], rtol=0,
                                   atol=1e-12)


class TestTheoremOne(TestCase):
    def setUp(self):
        self.episode = _walk(1, seed=3)

    def test_ratio_shrinks_with_alpha(self):
        ratios = [theorem1_ratio(self.episode, alpha, 0.9, np.zeros(10))
                  for alpha in (1e-2, 1e-3, 1e-4)]
        self.assertGreater(ratios[0], ratios[1])
        self.assertGreater(ratios[1], ratios[2])

    def test_theorem1_diagnostics(self):
        diagnostics = theorem1_diagnostics(self.episode, 0.01, 0.9,
                                           np.zeros(10))
        self.assertEqual((len(self.episode), 10),
                         diagnostics.delta_terms.shape)
        np.testing.assert_allclose(
            theta_history(make_learner('accumulate', 10, 0.01, 0.9),
                          self.episode)[-1], diagnostics.theta_td)

    def test_errors(self):
        self.assertRaises(DegenerateInputError, theorem1_diagnostics,
                          Trajectory([]), 0.1, 0.9, np.zeros(10))
        self.assertRaises(ConfigurationError, theorem1_diagnostics,
                          _walk(2), 0.1, 0.9, np.zeros(10))


class TestLms(TestCase):
    def test_tabular(self):
        mrp = generate_mrp(10, 3, 0.1, 0.99, 1)
        representation = build_representation('tabular', mrp)
        _, mse_star = lms_solution(mrp, representation)
        self.assertAlmostEqual(0.0, mse_star)

    def test_two_state(self):
        mrp, representation = canonical_task('two-state')
        for weighting in ('uniform', 'stationary'):
            theta_star, mse_star = lms_solution(mrp, representation,
                                                weighting)
            np.testing.assert_allclose([1.0], theta_star)
            self.assertAlmostEqual(1.0, mse_star)

    def test_lms_for_task(self):
        mrp = generate_mrp(10, 3, 0.1, 0.99, 1)
        representation, theta_star, mse_star = lms_for_task(mrp, 'binary')
        self.assertEqual((4,), theta_star.shape)
        self.assertEqual(4, representation.n)
        self.assertGreater(mse_star, 0.0)

    def test_state_weighting(self):
        mrp, _ = canonical_task('random-walk-10')
        self.assertAlmostEqual(0.1, state_weighting(mrp, 'uniform')[0])
        self.assertRaises(ConfigurationError, state_weighting, mrp, 'visits')


class TestControlForwardViews(TestCase):
    def test_sarsa_forward_view(self):
        trajectory = _control('true-online-sarsa', 0.2, 0.8)
        run = sarsa_forward_view(trajectory, 0.2, 0.8, np.zeros(12))
        history, _ = replay(make_learner('true-online-sarsa', 6, 0.2, 0.8,
                                         num_actions=2), trajectory)
        np.testing.assert_allclose(history, run.theta_history, rtol=0,
                                   atol=TOLERANCE)

    def test_watkins_forward_view(self):
        trajectory = _control('true-online-watkins-q', 0.2, 0.8, seed=5)
        run = watkins_forward_view(trajectory, 0.2, 0.8, np.zeros(12))
        history, _ = replay(make_learner('true-online-watkins-q', 6, 0.2,
                                         0.8, num_actions=2), trajectory)
        np.testing.assert_allclose(history, run.theta_history, rtol=0,
                                   atol=TOLERANCE)

    def test_not_annotated(self):
        self.assertRaises(ConfigurationError, sarsa_forward_view,
                          _one_state_episode(), 0.1, 0.5, [0.0])
        self.assertRaises(ConfigurationError, watkins_forward_view,
                          _one_state_episode(), 0.1, 0.5, [0.0])


def _max_return(trajectory, t, h, lookup, lam):
    returns, total, discount = [], 0.0, 1.0
    for j in range(t, h):
        step = trajectory[j]
        total += discount * step.reward
        discount *= step.gamma
        values = action_values(lookup(j), step.phi_next,
                               trajectory.num_actions)
        returns.append(total + discount * float(np.max(values)))
    weights = [(1.0 - lam) * lam ** n for n in range(len(returns) - 1)]
    weights.append(lam ** (len(returns) - 1))
    return float(np.dot(weights, returns))


class TestWatkinsInterimTarget(TestCase):
    def setUp(self):
        for seed in range(10):
            trajectory = _control('true-online-watkins-q', 0.2, 0.8, seed)
            if not all(trajectory.greedy_flags()):
                break
        self.trajectory = trajectory
        self.flags = trajectory.greedy_flags()
        thetas = Rng(3).random((len(trajectory) + 1, 12))

        def lookup(j):
            return thetas[j]

        self.lookup = lookup

    def test_fixture(self):
        self.assertFalse(all(self.flags))
        self.assertFalse(any(step.terminal for step in self.trajectory))

    def test_one_step(self):
        for t, step in enumerate(self.trajectory):
            values = action_values(self.lookup(t), step.phi_next, 2)
            self.assertAlmostEqual(
                step.reward + step.gamma * float(np.max(values)),
                watkins_interim_target(self.trajectory, t, t + 1,
                                       self.lookup, 0.7), delta=1e-12)

    def test_all_greedy(self):
        greedy = Trajectory([replace(step, next_greedy=True)
                             for step in self.trajectory], 2)
        size = len(greedy)
        for t in (0, 3, size // 2):
            for h in (t + 2, min(t + 7, size), size):
                self.assertAlmostEqual(
                    _max_return(greedy, t, h, self.lookup, 0.6),
                    watkins_interim_target(greedy, t, h, self.lookup, 0.6),
                    delta=1e-10)

    def test_cut_at_first_exploratory_action(self):
        tau = self.flags.index(False, 1)
        t = max(0, tau - 3)
        cut = watkins_interim_target(self.trajectory, t, tau, self.lookup,
                                     0.6)
        self.assertAlmostEqual(_max_return(self.trajectory, t, tau,
                                           self.lookup, 0.6), cut,
                               delta=1e-10)
        for h in range(tau + 1, len(self.trajectory) + 1):
            self.assertEqual(cut, watkins_interim_target(
                self.trajectory, t, h, self.lookup, 0.6))

    def test_matches_forward_view(self):
        alpha, lam = 0.2, 0.8
        run = watkins_forward_view(self.trajectory, alpha, lam,
                                   np.zeros(12))

        def lookup(j):
            return run.theta_history[j]

        for t in (len(self.trajectory) // 2, len(self.trajectory)):
            theta = np.zeros(12)
            for k in range(t):
                step = self.trajectory[k]
                psi = as_dense(stack_action_features(step.phi, step.action,
                                                     2))
                target = watkins_interim_target(self.trajectory, k, t,
                                                lookup, lam)
                theta = theta + alpha * (target - psi @ theta) * psi
            np.testing.assert_allclose(run.theta_history[t], theta, rtol=0,
                                       atol=TOLERANCE)

    def test_errors(self):
        self.assertRaises(ConfigurationError, watkins_interim_target,
                          _one_state_episode(), 0, 1, self.lookup, 0.5)
        self.assertRaises(HorizonError, watkins_interim_target,
                          self.trajectory, 2, 2, self.lookup, 0.5)
        self.assertRaises(HorizonError, watkins_interim_target,
                          self.trajectory, 0, len(self.trajectory) + 1,
                          self.lookup, 0.5)
