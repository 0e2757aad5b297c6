import numpy as np
import pytest

from fdss.chain import SystemConfig

_acceptance = []


def record_acceptance(number: int, title: str, passed: bool, detail: str = ""):
    _acceptance.append((number, title, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_acceptance):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}  {detail}".rstrip())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def small_cfg():
    return SystemConfig(n_data=8, n_se=2, n_fft=32)


def random_taps(rng, cfg, floor=0.05):
    """Random positive even-symmetric taps with unit energy."""
    half = rng.uniform(floor, 1.0, (cfg.n_sc + 1) // 2)
    v = np.concatenate([half, half[: cfg.n_sc // 2][::-1]])
    return v / np.linalg.norm(v)
