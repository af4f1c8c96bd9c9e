import time

import pytest

_RESULTS: dict[int, tuple[str, str, float, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    t0 = time.perf_counter()
    yield
    item._elapsed = time.perf_counter() - t0


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call":
        return
    num, title = mark.args
    status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
    detail = "; ".join(str(v) for k, v in rep.user_properties if k == "measured")
    _RESULTS[num] = (status, title, getattr(item, "_elapsed", 0.0), detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        status, title, secs, detail = _RESULTS[num]
        line = f"criterion {num:2d}: {status}  {title}  ({secs:.1f} s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
