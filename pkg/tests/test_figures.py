from unittest import TestCase

from tdlab.core import ConfigurationError
from tdlab.figures import (BUILDERS, FIG2_ALPHAS, FigureConfig, Table,
                           build_figure, fig1, fig2, fig3, fig4)
from tdlab.grammar import parse_grid


class TestTable(TestCase):
    def test_column(self):
        table = Table(('a', 'b'), ((1, 2), (3, 4)))
        self.assertEqual([2, 4], table.column('b'))
        self.assertRaises(ValueError, table.column, 'c')


class TestFigureConfig(TestCase):
    def test___post_init__(self):
        self.assertEqual(100, FigureConfig(2).runs)
        self.assertEqual(5, FigureConfig(4, runs=5).runs)
        self.assertRaises(ConfigurationError, FigureConfig, 5)
        self.assertRaises(ConfigurationError, FigureConfig, 1, runs=0)

    def test_parameters(self):
        self.assertEqual({'figure': 3, 'seed': 1, 'runs': 1, 'alphas': None,
                          'lambdas': [0.0]},
                         FigureConfig(3, seed=1, lambdas=(0.0,)).parameters())


class TestFig1(TestCase):
    def setUp(self):
        self.table = fig1(FigureConfig(1))

    def test_columns(self):
        self.assertEqual(('step', 'episode', 'offline', 'online',
                          'accumulate'), self.table.columns)
        self.assertEqual((0, 0, 1.0, 1.0, 1.0), self.table.rows[0])
        self.assertEqual(2, self.table.rows[-1][1])

    def test_offline_waits_for_episode_end(self):
        episodes = self.table.column('episode')
        stop = episodes.index(1)
        for value in self.table.column('offline')[:stop - 1]:
            self.assertEqual(1.0, value)

    def test_online_meets_offline_at_episode_ends(self):
        episodes = self.table.column('episode')
        ends = [t for t in range(1, len(episodes) - 1)
                if episodes[t + 1] != episodes[t]]
        ends.append(len(episodes) - 1)
        self.assertEqual(3, len(ends))
        offline = self.table.column('offline')
        online = self.table.column('online')
        for t in ends:
            self.assertAlmostEqual(offline[t], online[t], places=8)


class TestFig2(TestCase):
    def test_fig2(self):
        table = fig2(FigureConfig(2, runs=2, alphas=(0.1, 1.0)))
        self.assertEqual(('alpha', 'accumulate', 'true-online'),
                         table.columns)
        self.assertEqual([0.1, 1.0], table.column('alpha'))
        self.assertAlmostEqual(0.0, table.column('true-online')[1],
                               delta=1e-9)
        self.assertGreater(table.column('accumulate')[1], 0.1)

    def test_default_alphas(self):
        self.assertEqual(30, len(parse_grid(FIG2_ALPHAS)))


class TestFig3(TestCase):
    def test_fig3(self):
        table = fig3(FigureConfig(3, lambdas=(0.0, 1.0)))
        self.assertEqual(('lambda', 'accumulate', 'replace', 'true-online'),
                         table.columns)
        lambda_zero, lambda_one = table.rows
        self.assertEqual(lambda_zero[1], lambda_zero[2])
        self.assertGreater(lambda_zero[1], 1.3)
        self.assertLessEqual(lambda_one[1], 1.02)


class TestFig4(TestCase):
    def test_fig4(self):
        table = build_figure(FigureConfig(4, runs=2, alphas=(0.1,),
                                          lambdas=(0.5,)))
        self.assertEqual(8, len(table.rows))
        self.assertEqual(['accumulate', 'true-online'], [
            row[1] for row in table.rows if row[0] == 'random-normalized'])
        for row in table.rows:
            self.assertEqual((0.5, 0.1), row[2:4])

    def test_builders(self):
        self.assertEqual({1: fig1, 2: fig2, 3: fig3, 4: fig4}, BUILDERS)
