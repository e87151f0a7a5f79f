import pytest

_VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def verdict():
    """Record one acceptance line and assert it.

    Every line ends up in the terminal summary, pass or fail, so a single
    run shows the state of all exit criteria at once.
    """

    def record(name: str, ok: bool, detail: str):
        _VERDICTS.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    passed = sum(ok for _, ok, _ in _VERDICTS)
    terminalreporter.write_line(f"{passed}/{len(_VERDICTS)} acceptance checks passed")
