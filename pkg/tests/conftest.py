import sys
from pathlib import Path

import pytest

from xrepair.textio import parse_instance, parse_mapping, parse_query

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def load_mapping(path):
    return parse_mapping(Path(path).read_text())


def load_query(path):
    return parse_query(Path(path).read_text())


@pytest.fixture(scope="session")
def running():
    """Department mapping, its inconsistent source and the boss query."""
    d = DATA / "running_example"
    m = load_mapping(d / "mapping.xmap")
    src = parse_instance((d / "source.xinst").read_text(), m.source, source=True)
    return m, src, load_query(d / "boss.xq")


@pytest.fixture(scope="session")
def reach():
    d = DATA / "reachability"
    m = load_mapping(d / "mapping.xmap")
    src = parse_instance((d / "source.xinst").read_text(), m.source, source=True)
    return m, src, load_query(d / "reachable.xq")



def pytest_terminal_summary(terminalreporter):
    from gen import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, what = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {what}")
