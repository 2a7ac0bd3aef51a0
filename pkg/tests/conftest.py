import logging
from pathlib import Path

import pytest

from watercge.config import DATA_DIR, load_config
from watercge.scenarios import build_model, run_sweep, scenario_specs

logging.getLogger("watercge").setLevel(logging.ERROR)

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def model_a(cfg):
    return build_model(cfg, water_mobile=False)


@pytest.fixture(scope="session")
def model_b(cfg):
    return build_model(cfg, water_mobile=True)


@pytest.fixture(scope="session")
def sweeps(cfg, model_a, model_b):
    """All six scenario sweeps over the configured grid."""
    return {
        name: run_sweep(model_b if spec.water_mobile else model_a, spec)
        for name, spec in scenario_specs(cfg).items()
    }


@pytest.fixture
def record():
    """Store an acceptance verdict; the terminal summary prints one line per criterion."""
    def _record(number: int, passed: bool, detail: str = "") -> None:
        ACCEPTANCE[number] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
