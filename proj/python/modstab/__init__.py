"""Python front end to the modstab stability lab."""

import json
import os

from ._core import (
    REPORT_SCHEMA,
    ConfigError,
    DivergenceError,
    ModstabError,
    OutOfDiscError,
    PreconditionError,
    UnsupportedError,
    __version__,
    algebra_mul,
    list_scenarios,
    luxemburg_norm,
    modular,
    sample_unit_circle,
    three_unimodular_decomposition,
)
from ._core import builtin_scenario_json as _builtin_json
from ._core import run_config_json as _run_json

__all__ = [
    "REPORT_SCHEMA",
    "ConfigError",
    "DivergenceError",
    "ModstabError",
    "OutOfDiscError",
    "PreconditionError",
    "UnsupportedError",
    "__version__",
    "algebra_mul",
    "builtin_scenario",
    "list_scenarios",
    "luxemburg_norm",
    "modular",
    "run",
    "sample_unit_circle",
    "three_unimodular_decomposition",
]


def builtin_scenario(name):
    return json.loads(_builtin_json(name))


def run(config, seed_override=None, probes=None, timestamp=None):
    """Run a scenario and return (records, exit_code).

    config may be a dict, a builtin scenario name or a path to a JSON file.
    """
    if isinstance(config, (str, os.PathLike)):
        if os.path.exists(config):
            with open(config) as fh:
                text = fh.read()
        elif str(config) in list_scenarios():
            text = _builtin_json(str(config))
        else:
            raise ConfigError(f"no such config file or builtin scenario: {config}")
    else:
        text = json.dumps(config)
    lines, code = _run_json(text, seed_override, probes, timestamp)
    return [json.loads(line) for line in lines.splitlines()], code
