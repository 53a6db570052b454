from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

from rtlpilot.sim_tools import simulator_available  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

HAVE_SIM = simulator_available()
needs_sim = pytest.mark.skipif(not HAVE_SIM, reason="no Verilog simulator installed")


def pytest_collection_modifyitems(config, items):
    for item in items:
        if item.get_closest_marker("simulator") and not HAVE_SIM:
            item.add_marker(pytest.mark.skip(reason="no Verilog simulator installed"))


def pytest_terminal_summary(terminalreporter):
    from criteria import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
