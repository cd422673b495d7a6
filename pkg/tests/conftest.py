import pytest

from maxkxor.instances import Clause, Instance


@pytest.fixture
def triangle():
    """(x0 xor x1), (x1 xor x2), (x0 xor x2) on three variables."""
    return Instance(3, 2, (Clause((0, 1)), Clause((0, 2)), Clause((1, 2))))


@pytest.fixture
def single_clause():
    return Instance(3, 3, (Clause((0, 1, 2), 1),))


@pytest.fixture
def empty4():
    return Instance(4, 3, ())


_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (verdict, detail) in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{verdict}  {name}  {detail}")
