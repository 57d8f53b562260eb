from __future__ import annotations

import importlib

import pytest

from nbext import _core
from nbext._core import pykernel

try:
    ckernel = importlib.import_module("nbext._core.ckernel")
except ImportError:  # pragma: no cover
    ckernel = None

BACKENDS = {"python": pykernel, "cython": ckernel}


@pytest.fixture(params=["cython", "python"])
def backend(request, monkeypatch):
    """Run the test once per kernel implementation."""
    mod = BACKENDS[request.param]
    if mod is None:
        pytest.skip("compiled core not built")
    monkeypatch.setattr(_core, "kernel", mod)
    return mod


@pytest.fixture
def compiled():
    if ckernel is None:
        pytest.skip("compiled core not built")
    return ckernel


# ---------------------------------------------------------------------------
# acceptance reporting and the slow suite


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", help="run the hours-long acceptance checks")


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one verdict line per criterion; lines are echoed in the summary."""
    lines = request.config._acceptance_lines

    def record(number: int, title: str, ok: bool | None, detail: str = ""):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"criterion {number:2d} {status}  {title}" + (f"  [{detail}]" if detail else "")
        lines.append((number, line))
        print(line)
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
