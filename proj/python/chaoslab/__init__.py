"""Propagation-of-chaos experiments on the torus."""

import json

from ._core import (
    ConfigError,
    Error,
    SingularityError,
    __version__,
    critical_exponent,
    emit_plotdata,
    eval_kernel,
    h_minus1_norm,
    kuramoto_order_parameter,
    log_potential_cell_l2,
    mollifier_transform,
    preset_names,
    simulate_kuramoto,
    sobolev_constant,
)
from . import _core


def preset_config(preset):
    """Preset defaults as a dict."""
    return json.loads(_core.preset_config(preset))


def validate_config(config):
    """Resolved config for a dict or JSON string; raises ConfigError."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_core.validate_config(text))


def run(config, output_dir=""):
    """Runs a config (dict, JSON string or preset name) and returns its verdicts."""
    if isinstance(config, str) and config in preset_names():
        config = {"preset": config}
    text = config if isinstance(config, str) else json.dumps(config)
    return _core.run(text, output_dir)


__all__ = [
    "ConfigError",
    "Error",
    "SingularityError",
    "__version__",
    "critical_exponent",
    "emit_plotdata",
    "eval_kernel",
    "h_minus1_norm",
    "kuramoto_order_parameter",
    "log_potential_cell_l2",
    "mollifier_transform",
    "preset_config",
    "preset_names",
    "run",
    "simulate_kuramoto",
    "sobolev_constant",
    "validate_config",
]
