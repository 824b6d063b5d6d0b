import json
from unittest import TestCase
from unittest.mock import patch
from io import StringIO

from tdlab.base.encoder import (Encoder, TextEncoder, format_value,
                                manifest_line)
from tdlab.encoder import (Artifact, ConfigEncoder, EncodeError,
                           EnvironmentEncoder, ManifestEncoder,
                           SweepCsvEncoder, TableEncoder)
from tdlab.envs import canonical_task, generate_mdp
from tdlab.figures import Table
from tdlab.harness import CellResult


class TestEncodeError(TestCase):
    def test___str__(self):
        try:
            raise EncodeError('a', 'b')
        except EncodeError as e:
            self.assertEqual('Could not encode: a; b', str(e))


class TestEncoder(TestCase):
    @patch.multiple(Encoder, __abstractmethods__=set())
    def setUp(self):
        self.encoder = Encoder()

    def test_Encoder(self):
        self.assertRaises(TypeError, Encoder)

    def test_dump(self):
        fp = StringIO()
        with patch.object(self.encoder, '_encode', return_value='text'):
            self.encoder.dump([], fp)
        self.assertEqual('text', fp.getvalue())

    def test_dumps(self):
        self.assertIsNone(self.encoder.dumps([]))


class TestFormatValue(TestCase):
    def test_format_value(self):
        self.assertEqual('0.10000000000000001', format_value(0.1))
        self.assertEqual('inf', format_value(float('inf')))
        self.assertEqual('3', format_value(3))
        self.assertEqual('', format_value(None))
        self.assertEqual('true-online', format_value('true-online'))

    def test_manifest_line(self):
        self.assertEqual('# manifest {"a":1,"b":[2]}\n',
                         manifest_line({'b': [2], 'a': 1}))


class TestTextEncoder(TestCase):
    def test__encode(self):
        class ATextEncoder(TextEncoder):
            def columns(self, obj):
                return ('a', 'b')

            def entries(self, obj):
                return iter(obj.content)

            def encode_entry(self, entry):
                return entry

        encoder = ATextEncoder()
        self.assertEqual('a,b\n1,0.5\n',
                         encoder._encode(Artifact([(1, 0.5)])))
        self.assertEqual('# manifest {"c":1}\na,b\n',
                         encoder._encode(Artifact([], {'c': 1})))


class TestEnvironmentEncoder(TestCase):
    def setUp(self):
        self.encoder = EnvironmentEncoder()

    def test__encode(self):
        mrp, _ = canonical_task('one-state')
        document = json.loads(self.encoder.dumps(mrp))
        self.assertEqual(('tdlab', 1, 'mrp'), (document['format'],
                                             document['version'],
                                             document['kind']))
        body = document['body']
        self.assertEqual((2, 1.0, 0.0, [1], [1.0, 0.0]), (
            body['k'], body['gamma'], body['sigma'],
            body['terminal_states'], body['initial']))
        self.assertEqual(mrp.transitions.tolist(), body['transitions'])
        self.assertEqual([[0.0, 1.0], [0.0, 0.0]], body['rewards'])
        self.assertNotIn('manifest', document)

    def test_manifest(self):
        mrp, _ = canonical_task('one-state')
        manifest = {'command': 'gen-mrp', 'parameters': {},
                    'tool_version': '0.1.0'}
        text = self.encoder.dumps(Artifact(mrp, manifest))
        self.assertEqual(manifest, json.loads(text)['manifest'])
        self.assertTrue(text.endswith('}\n'))

    def test_mdp(self):
        body = self.encoder.encode_body(generate_mdp(3, 2, 2, 0.1, 0.9, 0))
        self.assertEqual(2, body['num_actions'])
        self.assertEqual('mdp', self.encoder.kind(
            generate_mdp(3, 2, 2, 0.1, 0.9, 0)))

    def test_errors(self):
        self.assertRaises(EncodeError, self.encoder.dumps, [])
        mrp, _ = canonical_task('one-state')
        self.assertRaises(EncodeError, self.encoder.dumps,
                          Artifact(mrp, {'value': float('nan')}))


class TestManifestEncoder(TestCase):
    def test__encode(self):
        manifest = {'command': 'sweep', 'parameters': {'runs': 1},
                    'tool_version': '0.1.0'}
        document = json.loads(ManifestEncoder().dumps(manifest))
        self.assertEqual('manifest', document['kind'])
        self.assertEqual(manifest, document['body'])
        self.assertNotIn('manifest', document)

    def test_config(self):
        document = json.loads(ConfigEncoder().dumps({'runs': 2}))
        self.assertEqual('config', document['kind'])
        self.assertEqual({'runs': 2}, document['body'])


class TestSweepCsvEncoder(TestCase):
    def test__encode(self):
        cells = [CellResult('accumulate', 0.1, 0.5, (1.0, 3.0),
                            (False, False)),
                 CellResult('true-online', 2.0, 1.0, (0.5,), (True,))]
        expected = ('variant,alpha,lambda,metric_mean,metric_se,runs,'
                    'diverged\n'
                    'accumulate,0.10000000000000001,0.5,2,1,2,0\n'
                    'true-online,2,1,0.5,0,1,1\n')
        self.assertEqual(expected, SweepCsvEncoder().dumps(Artifact(cells)))


class TestTableEncoder(TestCase):
    def test__encode(self):
        table = Table(('lambda', 'accumulate'), ((0.0, 1.5), (1.0, None)))
        self.assertEqual('# manifest {}\nlambda,accumulate\n0,1.5\n1,\n',
                         TableEncoder().dumps(Artifact(table, {})))
