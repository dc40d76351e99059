from __future__ import annotations

from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from fairdecode.contracts import Generator, Judge
from fairdecode.core import CostMeter
from fairdecode.mock import MockBackend, MockScript

settings.register_profile(
    "ci",
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")

#: criterion number -> "PASS|FAIL|SKIP criterion N: description"
ACCEPTANCE_RESULTS: dict[int, str] = {}


def record_acceptance(number: int, status: str, description: str) -> None:
    ACCEPTANCE_RESULTS[number] = f"{status} criterion {number}: {description}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])


@dataclass
class Pipeline:
    backend: MockBackend
    meter: CostMeter
    generator: Generator
    judge: Judge


@pytest.fixture
def pipeline_for():
    """Build a generator/judge pair over a scripted backend."""

    def build(script: MockScript, **kwargs) -> Pipeline:
        backend = MockBackend(script)
        meter = CostMeter()
        generator = Generator(backend, meter, **kwargs)
        judge = Judge(backend, meter)
        return Pipeline(backend, meter, generator, judge)

    return build
