"""Full-duplex acoustic link simulator."""

import json

from ._fdlink import (
    ConfigError,
    IoError,
    ParameterError,
    SolverError,
    code_rates,
    conv_encode,
    design_rrc,
    preset_json,
    presets,
    results_csv,
    viterbi_decode,
)
from ._fdlink import run_experiment as _run_experiment

__all__ = [
    "ConfigError",
    "IoError",
    "ParameterError",
    "SolverError",
    "code_rates",
    "conv_encode",
    "design_rrc",
    "preset",
    "presets",
    "results_csv",
    "run",
    "viterbi_decode",
]


def preset(name):
    """Returns a named experiment preset as a dict."""
    return json.loads(preset_json(name))


def run(config):
    """Runs an experiment given as a dict or JSON string; returns (rows, skipped)."""
    text = config if isinstance(config, str) else json.dumps(config)
    return _run_experiment(text)
