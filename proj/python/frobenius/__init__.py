"""Curved Frobenius, Hesse-Frobenius and skew-Hessian structures."""

import json as _json

from ._frobenius import *  # noqa: F401,F403
from ._frobenius import __version__, run_scenario as _run_scenario


def run(scenario, base_dir="."):
    """Run a scenario given as a dict; returns (report dict, exit code)."""
    text, code = _run_scenario(_json.dumps(scenario), base_dir)
    return _json.loads(text), code
