import pytest

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture
def criterion(request):
    """Call with (number, description); the outcome of the test is recorded."""
    slot = {}

    def register(number, text):
        slot["key"] = (number, text)

    yield register
    if "key" in slot:
        number, text = slot["key"]
        rep = getattr(request.node, "rep_call", None)
        ACCEPTANCE[number] = (rep is not None and rep.passed, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
