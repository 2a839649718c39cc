import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccdepo.field import StandingWaveConfig, fig2_field  # noqa: E402
from ccdepo.moldata import load_molecule  # noqa: E402

DATA = resources.files("ccdepo") / "data"


def data_path(name: str) -> Path:
    return Path(str(DATA / name))


@pytest.fixture(scope="session")
def n2():
    return load_molecule(data_path("n2_synthetic.mol"))


@pytest.fixture(scope="session")
def three_level():
    return load_molecule(data_path("three_level.mol"))


@pytest.fixture(scope="session")
def lam():
    return load_molecule(data_path("lambda_test.mol"))


@pytest.fixture
def field2():
    return fig2_field()


@pytest.fixture
def single_wave():
    """One standing wave only: cos^2 wells of depth ~ 1e-28 J on N2."""
    return StandingWaveConfig(2.9e6, 0.0, 0.628e-6, 0.736e-6)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """``verdict(n, ok, detail)`` records one PASS/FAIL line and asserts ``ok``."""
    def record(n: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        request.config.stash[_VERDICTS].append(line)
        print(line)
        assert ok, line
    return record
