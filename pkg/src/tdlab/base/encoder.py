"""Abstract base encoder classes."""
import json
from abc import ABCMeta, abstractmethod

from .decoder import FORMAT, VERSION


class EncodeError(ValueError):
    """Encoding exception."""

    def __str__(self):
        return 'Could not encode: {}'.format(
            '; '.join(str(arg) for arg in self.args))


class Encoder(metaclass=ABCMeta):
    """Abstract base class for encoders.

    Encoders are expected to implement a single method, ``_encode()``.

    """

    @abstractmethod
    def _encode(self, obj):
        """Encode ``obj`` and return a ``str``."""

    def dump(self, obj, fout):
        """Serialize ``obj`` as a tdlab artifact to ``fout`` (a
        ``.write()``-supporting file-like object).

        """
        fout.write(self.dumps(obj))

    def dumps(self, obj):
        """Serialize ``obj`` to a tdlab artifact ``str``."""
        return self._encode(obj)


def format_value(value):
    """Text of one cell: floats round-trip exactly, None is empty."""
    if value is None:
        return ''
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


def manifest_line(manifest):
    """The leading ``# manifest {json}`` line of a CSV artifact."""
    return '# manifest {}\n'.format(json.dumps(manifest, sort_keys=True,
                                               separators=(',', ':')))


class TextEncoder(Encoder):
    """Abstract base class for CSV encoders.

    Encoders are expected to override the ``columns``, ``entries`` and
    ``encode_entry`` methods. ``obj`` carries a ``manifest`` written as the
    first line.

    """

    @abstractmethod
    def columns(self, obj):
        """Header names for ``obj``."""

    @abstractmethod
    def entries(self, obj):
        """Iterate over the records of ``obj``."""

    @abstractmethod
    def encode_entry(self, entry):
        """Return the cell values of one record."""

    def _encode(self, obj):
        out = ''
        if obj.manifest is not None:
            out += manifest_line(obj.manifest)
        out += ','.join(self.columns(obj)) + '\n'
        for entry in self.entries(obj):
            out += ','.join(format_value(value)
                            for value in self.encode_entry(entry)) + '\n'
        return out


class DocumentEncoder(Encoder):
    """Abstract base class for JSON envelope encoders.

    Encoders are expected to override the ``kind`` and ``encode_body``
    methods.

    """

    @abstractmethod
    def kind(self, obj):
        """Envelope kind of ``obj``."""

    @abstractmethod
    def encode_body(self, obj):
        """Plain-data body of ``obj``."""

    def manifest(self, obj):
        """Manifest embedded in the envelope, if any."""
        return getattr(obj, 'manifest', None)

    def _encode(self, obj):
        envelope = {'format': FORMAT, 'version': VERSION,
                    'kind': self.kind(obj), 'body': self.encode_body(obj)}
        manifest = self.manifest(obj)
        if manifest is not None:
            envelope['manifest'] = manifest
        try:
            return json.dumps(envelope, sort_keys=True, indent=1,
                              allow_nan=False) + '\n'
        except ValueError as error:
            raise EncodeError(error)
