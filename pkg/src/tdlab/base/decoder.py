"""Abstract base decoder classes."""
import json
from abc import ABCMeta, abstractmethod

from pyparsing import ParseException

FORMAT = 'tdlab'
VERSION = 1


class DecodeError(ValueError):
    """Decoding exception."""

    def __str__(self):
        return 'Could not decode input: {}'.format(
            '; '.join(str(arg) for arg in self.args))


class Decoder(metaclass=ABCMeta):
    """Abstract base class for decoders.

    Decoders are expected to implement a single method, ``_decode()``.

    """

    @abstractmethod
    def _decode(self, string):
        """Decode ``string`` into a Python object."""

    def load(self, fin):
        """Deserialize ``fin`` (a ``.read()``-supporting file-like object
        containing a tdlab artifact) to a Python object.

        """
        return self.loads(fin.read())

    def loads(self, string):
        """Deserialize ``string`` (a ``str``, ``bytes`` or ``bytearray``
        instance containing a tdlab artifact) to a Python object.

        """
        if isinstance(string, (bytes, bytearray)):
            string = string.decode('utf-8')
        src = string.replace('\r\n', '\n').replace('\r', '\n')
        return self._decode(src)


class TextDecoder(Decoder):
    """Abstract base class for line-oriented text decoders.

    Decoders are expected to set the ``grammar`` property, and override the
    ``decode_tokens`` method.

    """

    @property
    @abstractmethod
    def grammar(self):
        """Pyparsing parser that should consume the full input string."""

    @abstractmethod
    def decode_tokens(self, tokens):
        """Build the decoded object from the parse results ``tokens``."""

    def _decode(self, string):
        try:
            tokens = self.grammar.parse_string(string, parse_all=True)
        except ParseException as error:
            raise DecodeError('{}: {}'.format(type(self).__name__, error))
        return self.decode_tokens(tokens)


class DocumentDecoder(Decoder):
    """Abstract base class for decoders of JSON envelope documents.

    An envelope reads ``{"format": "tdlab", "version": 1, "kind": ...,
    "body": ...}`` with an optional ``manifest``. Decoders are expected to
    set the ``kinds`` property and override ``decode_body``.

    """

    @property
    @abstractmethod
    def kinds(self):
        """Document kinds this decoder accepts."""

    @abstractmethod
    def decode_body(self, kind, body):
        """Build the decoded object from a validated ``body``."""

    def decode_document(self, envelope):
        """Decode a validated envelope; the default reads its body."""
        return self.decode_body(envelope['kind'], envelope['body'])

    def _decode(self, string):
        try:
            envelope = json.loads(string)
        except ValueError as error:
            raise DecodeError('not a JSON document ({})'.format(error))
        if not isinstance(envelope, dict):
            raise DecodeError('the document is not a JSON object')
        if envelope.get('format') != FORMAT:
            raise DecodeError('missing "format": "{}"'.format(FORMAT))
        if envelope.get('version') != VERSION:
            raise DecodeError('unsupported version {!r}'.format(
                envelope.get('version')))
        if envelope.get('kind') not in self.kinds:
            raise DecodeError('kind {!r} is not one of {}'.format(
                envelope.get('kind'), ', '.join(self.kinds)))
        if 'body' not in envelope:
            raise DecodeError('missing "body"')
        try:
            return self.decode_document(envelope)
        except DecodeError:
            raise
        except (KeyError, TypeError, ValueError) as error:
            raise DecodeError('malformed {} body: {!r}'.format(
                envelope['kind'], error))
