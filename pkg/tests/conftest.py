import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, n=3):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion checked by this test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    label = str(marker.args[0])
    entry = _CRITERIA.setdefault(label, {"ok": True, "tests": [], "time": 0.0})
    entry["ok"] &= call.excinfo is None
    entry["time"] += call.duration
    entry["tests"].append(item.name + ("" if call.excinfo is None else " (failed)"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s)):
        entry = _CRITERIA[label]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {label}: {status}  ({entry['time']:.1f} s; "
                                    + ", ".join(entry["tests"]) + ")")
