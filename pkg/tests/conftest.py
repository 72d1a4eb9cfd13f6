import numpy as np
import pytest

from sms_handover.model import load_system_model
from sms_handover.sim import compute_metrics, load_scenario_config, run_scenario


@pytest.fixture(scope="session")
def model():
    return load_system_model()


@pytest.fixture(scope="session")
def scenario_config():
    return load_scenario_config()


@pytest.fixture(scope="session")
def scenario_runs(model, scenario_config):
    """Bundled 60 s scenario under both controllers: {controller: (log, report, seconds)}."""
    import time

    out = {}
    for controller in ("pid", "nmpc"):
        cfg = scenario_config.with_overrides(controller=controller)
        t0 = time.perf_counter()
        log = run_scenario(cfg, model)
        seconds = time.perf_counter() - t0
        out[controller] = (log, compute_metrics(log, model.base.mass, model.base.inertia_tensor), seconds)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one verdict line per acceptance criterion (printed in the terminal summary)."""

    def record(number: int, passed: bool, text: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}"
        _ACCEPTANCE[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
