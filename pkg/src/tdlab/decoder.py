"""Decoder implementations for tdlab."""
import json

import numpy as np

from .base.decoder import DecodeError, Decoder, DocumentDecoder, TextDecoder
from .core import ConfigurationError
from .envs import Mdp, Mrp
from .grammar import sweep_csv, table_csv

__all__ = ['DecodeError', 'AutoDecoder', 'ConfigDecoder',
           'EnvironmentDecoder', 'ManifestDecoder', 'SweepCsvDecoder',
           'TableManifestDecoder']


def _manifest(text):
    try:
        manifest = json.loads(text)
    except ValueError as error:
        raise DecodeError('bad manifest line ({})'.format(error))
    if not isinstance(manifest, dict):
        raise DecodeError('the manifest is not a JSON object')
    return manifest


class EnvironmentDecoder(DocumentDecoder):
    """Decoding class for ``Mrp`` and ``Mdp`` environment files."""

    kinds = ('mrp', 'mdp')

    def decode_body(self, kind, body):
        """Return the ``Mrp`` or ``Mdp`` described by ``body``."""
        transitions = np.array(body['transitions'], dtype=np.float64)
        k = int(body['k'])
        if transitions.shape[0] != k:
            raise DecodeError('k = {} but the transitions have {} rows'
                              .format(k, transitions.shape[0]))
        if kind == 'mdp' and transitions.shape[1:2] != (body['num_actions'],):
            raise DecodeError('num_actions does not match the transitions')
        cls = Mrp if kind == 'mrp' else Mdp
        try:
            return cls(transitions, np.array(body['rewards']),
                       body['sigma'], body['gamma'],
                       frozenset(body['terminal_states']), body['initial'])
        except ConfigurationError as error:
            raise DecodeError(str(error))


class ManifestDecoder(DocumentDecoder):
    """Decoding class for manifests, configuration files and the manifests
    embedded in environment files.

    Always returns a ``{"command", "parameters", "tool_version"}`` mapping.

    """

    kinds = ('manifest', 'config', 'mrp', 'mdp')

    def decode_body(self, kind, body):
        """Return the manifest held in ``body``."""
        if kind == 'config':
            return {'command': None, 'parameters': dict(body),
                    'tool_version': None}
        return dict(body)

    def decode_document(self, envelope):
        if envelope['kind'] in ('mrp', 'mdp'):
            if 'manifest' not in envelope:
                raise DecodeError('the environment file has no manifest')
            return self.decode_body('manifest', envelope['manifest'])
        return super(ManifestDecoder, self).decode_document(envelope)


class SweepCsvDecoder(TextDecoder):
    """Decoding class for sweep result CSVs.

    Returns ``{"manifest": dict or None, "rows": [(variant, alpha, lambda,
    metric_mean, metric_se, runs, diverged), ...]}``.

    """

    grammar = sweep_csv

    def decode_tokens(self, tokens):
        """Return the manifest and rows of a parsed sweep CSV."""
        manifest = _manifest(tokens.manifest[1]) if tokens.manifest else None
        return {'manifest': manifest,
                'rows': [tuple(row) for row in tokens.rows]}


class TableManifestDecoder(TextDecoder):
    """Decoding class for the manifest line of any CSV artifact."""

    grammar = table_csv

    def decode_tokens(self, tokens):
        """Return the manifest of a parsed CSV artifact."""
        return _manifest(tokens.manifest[1])


class AutoDecoder(Decoder):
    """Auto-decoding class.

    Determines the input format by trying ``decoders`` until one succeeds.
    If they all fail, raises a ``DecodeError`` listing every failure.

    """

    decoders = (EnvironmentDecoder, ManifestDecoder, SweepCsvDecoder)

    def _decode(self, string):
        """No-op. Instead, concrete class ``_decode()`` methods are used."""

    def loads(self, string):
        """Try to decode ``string`` with each decoder in turn.

        Raise ``DecodeError`` if all decoders are exhausted.

        """
        failures = []
        for cls in self.decoders:
            try:
                return cls().loads(string)
            except DecodeError as error:
                failures.append('{}: {}'.format(cls.__name__, error))
        raise DecodeError(*failures)


class ConfigDecoder(AutoDecoder):
    """Decoding class for ``--config`` files.

    Accepts configuration documents, manifests, environment files with an
    embedded manifest and CSV artifacts; returns the manifest mapping.

    """

    decoders = (ManifestDecoder, TableManifestDecoder)
