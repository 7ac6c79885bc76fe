import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from acaslab.core import ModelVariant, Params, validate_params

settings.register_profile(
    "default", deadline=None, max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("quick", deadline=None, max_examples=25)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=list(ModelVariant), ids=lambda v: v.value)
def variant(request):
    return request.param


def vparams(variant, **kw):
    return validate_params(Params(**kw), variant)


_REPORT: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""
    def _report(n: int, ok: bool, detail: str) -> bool:
        _REPORT[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_REPORT[n])
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_REPORT):
            terminalreporter.write_line(_REPORT[n])
