"""Python front end for the hysctl core library."""

import json

from . import _core
from ._core import (
    DivergenceError,
    DomainError,
    UnknownExperiment,
    bank_apply,
    build_uk,
    build_vj,
    build_vk,
    experiment_ids,
    play_apply,
    play_update,
    sup_distance,
    truncated_play_apply,
)

__version__ = _core.__version__


def default_params(experiment):
    return json.loads(_core.default_params(experiment))


def run_experiment(experiment, **overrides):
    """Run a registered experiment and return its report as a dict."""
    return json.loads(_core.run_experiment(experiment, json.dumps(overrides)))


__all__ = [
    "DivergenceError",
    "DomainError",
    "UnknownExperiment",
    "bank_apply",
    "build_uk",
    "build_vj",
    "build_vk",
    "default_params",
    "experiment_ids",
    "play_apply",
    "play_update",
    "run_experiment",
    "sup_distance",
    "truncated_play_apply",
]
