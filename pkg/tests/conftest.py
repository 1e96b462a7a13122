from pathlib import Path

import pytest

from logperiod.model import LpplParams, Orientation, Shape

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


def bubble_params(shape=Shape.COSINE, **kw):
    base = dict(t_c=2007.4, alpha=0.45, A=7.0, B=-0.8, C=0.08, phi=1.0, shape=shape,
                orientation=Orientation.BUBBLE)
    base.update(kw)
    return LpplParams(**base)


def write_csv_rows(path, rows, header=True):
    lines = (["date,value"] if header else []) + [f"{d},{v}" for d, v in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# acceptance lines, printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
