import os
from pathlib import Path

import numpy as np
import pytest

from psafair.data import Dataset

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def raw_data_dir() -> Path:
    return Path(os.environ.get("PSAFAIR_DATA_DIR", ROOT / "data" / "raw"))


def random_instance(rng, n):
    """Binary (y_true, y_pred, s) with both groups, both classes and minority positives."""
    while True:
        y = rng.integers(0, 2, n)
        p = rng.integers(0, 2, n)
        s = rng.integers(0, 2, n)
        minority = s == 0
        if (
            minority.any()
            and (~minority).any()
            and y.min() == 0
            and y.max() == 1
            and y[minority].any()
            and p[~minority].any()
        ):
            return y, p, s


def toy_dataset(rng, n=200, d=2, shift=1.0, name="toy"):
    s = (rng.random(n) < 0.5).astype(int)
    X = rng.standard_normal((n, d))
    z = X @ np.linspace(1.0, 0.5, d) + shift * (s - 0.5) + 0.5 * rng.standard_normal(n)
    y = (z > 0).astype(int)
    s[:2] = [0, 1]
    y[:4] = [0, 1, 0, 1]
    s[2:4] = [0, 0]
    return Dataset(np.column_stack([X]), y, s, tuple(f"x{i}" for i in range(d)), name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance summary

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        detail = dict(item.user_properties).get("detail", "")
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        _CRITERIA.append((marker.args[0], marker.args[1], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(_CRITERIA, key=lambda r: r[0]):
        line = f"criterion {num}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
