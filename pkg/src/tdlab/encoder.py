"""Encoder implementations for tdlab."""
from dataclasses import dataclass

from .base.encoder import DocumentEncoder, EncodeError, TextEncoder
from .envs import Mdp, Mrp

__all__ = ['Artifact', 'EncodeError', 'EnvironmentEncoder',
           'ManifestEncoder', 'ConfigEncoder', 'SweepCsvEncoder',
           'TableEncoder', 'SWEEP_COLUMNS']

SWEEP_COLUMNS = ('variant', 'alpha', 'lambda', 'metric_mean', 'metric_se',
                 'runs', 'diverged')


@dataclass(frozen=True)
class Artifact:
    """Content to serialize together with the manifest that produced it."""

    content: object
    manifest: dict = None


def _content(obj):
    return obj.content if isinstance(obj, Artifact) else obj


class EnvironmentEncoder(DocumentEncoder):
    """Encoding class for ``Mrp`` and ``Mdp`` environment files.

    Arrays are written as nested lists, floats with ``repr`` so that a
    decoded environment compares equal to the encoded one.

    """

    def kind(self, obj):
        env = _content(obj)
        if isinstance(env, Mrp):
            return 'mrp'
        if isinstance(env, Mdp):
            return 'mdp'
        raise EncodeError('expected an Mrp or an Mdp, got {}'.format(
            type(env).__name__))

    def encode_body(self, obj):
        env = _content(obj)
        body = {
            'k': env.k,
            'gamma': float(env.gamma),
            'sigma': float(env.sigma),
            'terminal_states': sorted(env.terminal_states),
            'initial': env.initial.tolist(),
            'transitions': env.transitions.tolist(),
            'rewards': env.rewards.tolist(),
        }
        if isinstance(env, Mdp):
            body['num_actions'] = env.num_actions
        return body


class ManifestEncoder(DocumentEncoder):
    """Encoding class for stand-alone manifests."""

    def kind(self, obj):
        return 'manifest'

    def encode_body(self, obj):
        return dict(obj)

    def manifest(self, obj):
        return None


class ConfigEncoder(ManifestEncoder):
    """Encoding class for configuration files (bare parameter mappings)."""

    def kind(self, obj):
        return 'config'


class SweepCsvEncoder(TextEncoder):
    """Encoding class for sweep results.

    One row per (variant, alpha, lambda) cell in the order of the
    ``SweepResult``.

    """

    def columns(self, obj):
        return SWEEP_COLUMNS

    def entries(self, obj):
        return iter(obj.content)

    def encode_entry(self, entry):
        return (entry.variant, entry.alpha, entry.lam, entry.mean, entry.se,
                entry.runs, entry.diverged)


class TableEncoder(TextEncoder):
    """Encoding class for figure tables."""

    def columns(self, obj):
        return obj.content.columns

    def entries(self, obj):
        return iter(obj.content.rows)

    def encode_entry(self, entry):
        return entry
