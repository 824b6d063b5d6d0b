"""Public API entry-point for tdlab."""

from .decoder import (DecodeError,
                      AutoDecoder,
                      ConfigDecoder,
                      EnvironmentDecoder,
                      ManifestDecoder,
                      SweepCsvDecoder,
                      TableManifestDecoder)

from .encoder import (EncodeError,
                      Artifact,
                      ConfigEncoder,
                      EnvironmentEncoder,
                      ManifestEncoder,
                      SweepCsvEncoder,
                      TableEncoder)

from .core import (ConfigurationError, DimensionError, SparseFeatures,
                   Trajectory, Transition, features)
from .envs import (Mdp, Mrp, canonical_task, generate_mdp, generate_mrp,
                   true_values)
from .algos import LEARNERS, make_learner, run_episode, sample_trajectory
from .oracle import (lms_solution, offline_lambda_return_algorithm,
                     online_lambda_return_algorithm, theorem1_ratio)
from .harness import SweepConfig, best_per_lambda, run_sweep


__version__ = '0.1.0'
__all__ = [
    'load', 'loads',
    'dump', 'dumps',
    'DecodeError',
    'AutoDecoder',
    'ConfigDecoder',
    'EnvironmentDecoder',
    'ManifestDecoder',
    'SweepCsvDecoder',
    'TableManifestDecoder',
    'EncodeError',
    'Artifact',
    'ConfigEncoder',
    'EnvironmentEncoder',
    'ManifestEncoder',
    'SweepCsvEncoder',
    'TableEncoder',
    'ConfigurationError', 'DimensionError', 'SparseFeatures', 'Trajectory',
    'Transition', 'features',
    'Mdp', 'Mrp', 'canonical_task', 'generate_mdp', 'generate_mrp',
    'true_values',
    'LEARNERS', 'make_learner', 'run_episode', 'sample_trajectory',
    'lms_solution', 'offline_lambda_return_algorithm',
    'online_lambda_return_algorithm', 'theorem1_ratio',
    'SweepConfig', 'best_per_lambda', 'run_sweep',
]


def load(fin, cls=AutoDecoder):
    """Deserialize ``fin`` (a ``.read()``-supporting file-like object
    containing a tdlab artifact) to a Python object.

    To use a specific ``Decoder`` subclass, specify it with the ``cls``
    kwarg; otherwise ``AutoDecoder`` is used.

    """
    return cls().load(fin)


def loads(string, cls=AutoDecoder):
    """Deserialize ``string`` (a ``str``, ``bytes`` or ``bytearray``
    instance containing a tdlab artifact) to a Python object.

    To use a specific ``Decoder`` subclass, specify it with the ``cls``
    kwarg; otherwise ``AutoDecoder`` is used.

    """
    return cls().loads(string)


def dump(obj, fout, cls=EnvironmentEncoder):
    """Serialize ``obj`` as a tdlab artifact to ``fout`` (a
    ``.write()``-supporting file-like object).

    To use a specific ``Encoder`` subclass, specify it with the ``cls``
    kwarg; otherwise ``EnvironmentEncoder`` is used.

    """
    return cls().dump(obj, fout)


def dumps(obj, cls=EnvironmentEncoder):
    """Serialize ``obj`` to a tdlab artifact ``str``.

    To use a specific ``Encoder`` subclass, specify it with the ``cls``
    kwarg; otherwise ``EnvironmentEncoder`` is used.

    """
    return cls().dumps(obj)
