"""Python access to the loss recovery simulator.

Configs are passed as JSON text with the same schema as the CLI config files;
missing keys keep their defaults.
"""

import json

from ._autorec import (
    decide_k_theta,
    default_config_json,
    f_recovery_latency,
    g_redundancy_cost,
    h_goodput_reduction,
    normalize_config_json,
    run_replications,
    run_trace,
    trace_metrics,
)

__all__ = [
    "decide_k_theta",
    "default_config",
    "f_recovery_latency",
    "g_redundancy_cost",
    "h_goodput_reduction",
    "run",
    "simulate",
    "trace_metrics",
]


def default_config():
    return json.loads(default_config_json())


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return json.dumps(config)


def simulate(config=None):
    """Runs one simulation and returns its trace text."""
    return run_trace(_text(config))


def run(config=None, paired_baseline=True):
    """Runs every replication of `config` and returns the aggregate metrics."""
    return run_replications(_text(config), paired_baseline)
