import json
from unittest import TestCase
from unittest.mock import patch
from io import StringIO

from tdlab.base.decoder import Decoder
from tdlab.decoder import (AutoDecoder, ConfigDecoder, DecodeError,
                           EnvironmentDecoder, ManifestDecoder,
                           SweepCsvDecoder, TableManifestDecoder)
from tdlab.encoder import (Artifact, ConfigEncoder, EnvironmentEncoder,
                           ManifestEncoder)
from tdlab.envs import canonical_task, generate_mdp, generate_mrp

MANIFEST = {'command': 'sweep', 'parameters': {'runs': 2},
            'tool_version': '0.1.0'}
SWEEP_CSV = ('# manifest {"command":"sweep"}\n'
             'variant,alpha,lambda,metric_mean,metric_se,runs,diverged\n'
             'accumulate,0.10000000000000001,0.5,2,1,2,0\n')


def _envelope(**fields):
    envelope = {'format': 'tdlab', 'version': 1, 'kind': 'mrp', 'body': {}}
    envelope.update(fields)
    return json.dumps(envelope)


class TestDecodeError(TestCase):
    def test___str__(self):
        try:
            raise DecodeError('a', 'b')
        except DecodeError as e:
            self.assertEqual('Could not decode input: a; b', str(e))


class TestDecoder(TestCase):
    @patch.multiple(Decoder, __abstractmethods__=set())
    def setUp(self):
        self.decoder = Decoder()

    def test_Decoder(self):
        self.assertRaises(TypeError, Decoder)

    def test_load(self):
        self.assertIsNone(self.decoder.load(StringIO('')))

    def test_loads(self):
        with patch.object(self.decoder, '_decode',
                          side_effect=lambda string: string):
            self.assertEqual('a\nb\nc', self.decoder.loads(b'a\r\nb\rc'))


class TestEnvironmentDecoder(TestCase):
    def setUp(self):
        self.decoder = EnvironmentDecoder()

    def test_loads(self):
        for env in (generate_mrp(5, 2, 0.1, 0.9, 3),
                    generate_mdp(4, 2, 3, 0.0, 0.5, 1),
                    canonical_task('random-walk-10')[0]):
            self.assertEqual(env, self.decoder.loads(
                EnvironmentEncoder().dumps(env)))

    def test_errors(self):
        mrp, _ = canonical_task('one-state')
        body = json.loads(EnvironmentEncoder().dumps(mrp))['body']
        cases = [
            'not json',
            '[1, 2]',
            _envelope(format='other'),
            _envelope(version=2),
            _envelope(kind='table'),
            json.dumps({'format': 'tdlab', 'version': 1, 'kind': 'mrp'}),
            _envelope(body={}),
            _envelope(body=dict(body, k=3)),
            _envelope(body=dict(body, gamma=2.0)),
            _envelope(kind='mdp', body=dict(body, num_actions=3)),
        ]
        for string in cases:
            self.assertRaises(DecodeError, self.decoder.loads, string)

    def test_error_message(self):
        with self.assertRaises(DecodeError) as context:
            self.decoder.loads(_envelope(version=2))
        self.assertEqual('Could not decode input: unsupported version 2',
                         str(context.exception))


class TestManifestDecoder(TestCase):
    def setUp(self):
        self.decoder = ManifestDecoder()

    def test_manifest(self):
        self.assertEqual(MANIFEST, self.decoder.loads(
            ManifestEncoder().dumps(MANIFEST)))

    def test_config(self):
        self.assertEqual({'command': None, 'parameters': {'runs': 3},
                          'tool_version': None},
                         self.decoder.loads(ConfigEncoder().dumps(
                             {'runs': 3})))

    def test_environment(self):
        mrp, _ = canonical_task('one-state')
        text = EnvironmentEncoder().dumps(Artifact(mrp, MANIFEST))
        self.assertEqual(MANIFEST, self.decoder.loads(text))
        self.assertRaises(DecodeError, self.decoder.loads,
                          EnvironmentEncoder().dumps(mrp))


class TestSweepCsvDecoder(TestCase):
    def setUp(self):
        self.decoder = SweepCsvDecoder()

    def test_loads(self):
        self.assertEqual({'manifest': {'command': 'sweep'},
                          'rows': [('accumulate', 0.1, 0.5, 2.0, 1.0, 2, 0)]},
                         self.decoder.loads(SWEEP_CSV))

    def test_without_manifest(self):
        text = SWEEP_CSV.split('\n', 1)[1]
        self.assertIsNone(self.decoder.loads(text)['manifest'])

    def test_errors(self):
        self.assertRaises(DecodeError, self.decoder.loads, 'variant,alpha\n')
        self.assertRaises(DecodeError, self.decoder.loads,
                          SWEEP_CSV.replace('{"command":"sweep"}', '{x}'))
        with self.assertRaises(DecodeError) as context:
            self.decoder.loads('')
        self.assertIn('SweepCsvDecoder', str(context.exception))


class TestTableManifestDecoder(TestCase):
    def test_loads(self):
        text = '# manifest {"command":"figures"}\nlambda,accumulate\n0,1\n'
        self.assertEqual({'command': 'figures'},
                         TableManifestDecoder().loads(text))
        self.assertRaises(DecodeError, TableManifestDecoder().loads,
                          'lambda,accumulate\n')
        self.assertRaises(DecodeError, TableManifestDecoder().loads,
                          '# manifest [1]\n')


class TestAutoDecoder(TestCase):
    def setUp(self):
        self.decoder = AutoDecoder()

    def test__decode(self):
        self.assertEqual(None, self.decoder._decode(''))

    def test_loads(self):
        mrp = generate_mrp(5, 2, 0.1, 0.9, 3)
        self.assertEqual(mrp, self.decoder.loads(
            EnvironmentEncoder().dumps(mrp)))
        self.assertEqual(MANIFEST, self.decoder.loads(
            ManifestEncoder().dumps(MANIFEST)))
        self.assertEqual(2, len(self.decoder.loads(SWEEP_CSV)['rows'][0][
            5:]))

    def test_errors(self):
        with self.assertRaises(DecodeError) as context:
            self.decoder.loads('hello')
        message = str(context.exception)
        for name in ('EnvironmentDecoder', 'ManifestDecoder',
                     'SweepCsvDecoder'):
            self.assertIn(name, message)


class TestConfigDecoder(TestCase):
    def test_loads(self):
        decoder = ConfigDecoder()
        self.assertEqual(MANIFEST, decoder.loads(
            ManifestEncoder().dumps(MANIFEST)))
        self.assertEqual({'command': 'sweep'}, decoder.loads(SWEEP_CSV))
        self.assertRaises(DecodeError, decoder.loads, 'runs=2')
