import numpy as np
import pytest

from seawake.geoproject import ClipTiming
from seawake.synthscene import value_noise

# criterion number -> (description, passed)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        prev = _ACCEPTANCE.get(number, (title, True))[1]
        _ACCEPTANCE[number] = (title, prev and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}")


@pytest.fixture
def default_timing():
    return ClipTiming()


def smooth_texture(size=256, seed=3, cell_px=16.0):
    """Value-noise texture rescaled to [0, 1]."""
    axis = np.arange(size, dtype=np.float64)
    img = value_noise(axis, axis, seed=seed, octaves=3, cell_px=cell_px)
    return (img - img.min()) / (img.max() - img.min())


@pytest.fixture
def texture():
    return smooth_texture()
