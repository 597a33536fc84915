"""Python front end for the hybsurg simulator.

Each function mirrors a CLI subcommand and returns the report as a dict.
"""

import json

from . import _core
from ._core import UsageError, clifford_level, group_labels, multiplication_table, protocol_names, s_matrix

__version__ = _core.__version__

__all__ = [
    "UsageError",
    "anyons",
    "center",
    "clifford_level",
    "cross_check",
    "exit_code",
    "group_labels",
    "multiplication_table",
    "protocol_names",
    "run_protocol",
    "s_matrix",
    "syndrome_table",
    "verify",
]


def _run(subcommand, **config):
    config = {k: v for k, v in config.items() if v is not None}
    config["subcommand"] = subcommand
    return json.loads(_core.run_report(json.dumps(config)))


def run_protocol(protocol, **options):
    return _run("run-protocol", protocol=protocol, **options)


def verify(*fixtures, jobs=1):
    return _run("verify", fixtures=[str(f) for f in fixtures], jobs=jobs)


def cross_check(fragments=None, rows=1, seed=0, cap_amplitudes=None, jobs=1):
    return _run("cross-check", fragments=list(fragments or []), rows=rows, seed=seed,
                cap_amplitudes=cap_amplitudes, jobs=jobs)


def syndrome_table(probe="both", fixture=None, csv=None):
    return _run("syndrome-table", probe=probe, fixture=fixture, csv=csv)


def anyons(group="D4", fixture=None):
    return _run("anyons", group=group, fixture=fixture)


def center(group):
    return json.loads(_core.center(group))


def exit_code(report):
    return _core.exit_code(json.dumps(report))
