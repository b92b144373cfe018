import numpy as np
import pytest

from ives_sme.atomic_data import default_atomic_data, enumerate_lambda_systems
from ives_sme.detuning import FieldConfig, laser_frequency
from ives_sme.liouville import DecayRates

_ACCEPTANCE: dict[int, list] = {}


@pytest.fixture(scope="session")
def data():
    return default_atomic_data()


@pytest.fixture(scope="session")
def constants(data):
    return data.constants


@pytest.fixture(scope="session")
def enumeration(data):
    return enumerate_lambda_systems(data=data)


@pytest.fixture(scope="session")
def fig_rates(constants):
    """Heavily dephased optical coherences, as in the single-system figure."""
    half = 0.5 * constants.gamma31_natural
    return DecayRates(Gamma31=half, Gamma32=half, gamma21=0.0, gamma31=1e11, gamma32=1e11)


@pytest.fixture(scope="session")
def fig_field(constants):
    omega_c = 1e-4 * 1e11
    return FieldConfig(laser_frequency(constants), 1e-3 * omega_c, omega_c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Log one sub-check of a numbered acceptance criterion."""

    def _record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[number]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        detail = "; ".join(f"{'ok' if ok else 'FAILED'}: {d}" for ok, d in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {status}  ({detail})")
