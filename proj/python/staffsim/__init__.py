"""Python access to the staffing simulator.

Every function takes and returns plain dicts and lists; they are exchanged
with the C++ core as JSON.
"""

import json as _json

from . import _staffsim
from ._staffsim import InvariantError, JSONError, ValidationError

__version__ = _staffsim.__version__

__all__ = [
    "ValidationError",
    "InvariantError",
    "JSONError",
    "generate_environment",
    "run",
    "schedule",
    "reschedule",
    "check_feasibility",
    "estimate",
]


def generate_environment(config=None):
    """Synthetic workers and hidden attributes for an EnvConfig dict."""
    return _json.loads(_staffsim.generate_environment(_json.dumps(config or {})))


def run(env, steps, bias_off_at=None):
    """Advance an environment (or saved state) and return the full state."""
    return _json.loads(_staffsim.run(_json.dumps(env), int(steps), bias_off_at))


def schedule(request):
    """Ranked leaves of the planner: [{"schedule": ..., "score": ...}, ...].

    request keys: workers, pending, previous, known, attributes, now,
    soft_skills, weights, beam_width, planning_horizon.
    """
    return _json.loads(_staffsim.schedule(_json.dumps(request)))


def reschedule(request):
    """Same request shape as schedule(); also honors max_attempts."""
    return _json.loads(_staffsim.reschedule(_json.dumps(request)))


def check_feasibility(schedule, tasks, workers):
    request = {"schedule": schedule, "tasks": tasks, "workers": workers}
    return _json.loads(_staffsim.check_feasibility(_json.dumps(request)))


def estimate(history, kind, now, gamma=0.99, weights=None):
    """Weighted estimate of one attribute, or None for an empty history."""
    out = _staffsim.estimate(
        _json.dumps(history), kind, int(now), float(gamma), _json.dumps(weights) if weights else ""
    )
    return None if out is None else _json.loads(out)
