import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Log one acceptance line; the test still asserts on ``ok`` itself."""
    def _record(name: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
        print(_ACCEPTANCE[-1])
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
