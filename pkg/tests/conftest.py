import pytest

from neuroimpulse import experiments as ex

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record(num: int, title: str, ok: bool, detail: str = "") -> None:
    """Store a criterion outcome; several parts of one criterion are AND-combined."""
    if num in ACCEPTANCE:
        prev_title, prev_ok, prev_detail = ACCEPTANCE[num]
        title = title or prev_title
        ok = prev_ok and ok
        detail = "; ".join(d for d in (prev_detail, detail) if d)
    ACCEPTANCE[num] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}" + (f" ({detail})" if detail else ""))
    passed = sum(ok for _, ok, _ in ACCEPTANCE.values())
    tr.write_line(f"{passed}/{len(ACCEPTANCE)} criteria passed")


@pytest.fixture(scope="session")
def fig2_runs():
    return ex.run_fig2()


@pytest.fixture(scope="session")
def fig4_runs():
    return ex.run_fig4()


@pytest.fixture(scope="session")
def connected_run():
    return ex.run_connected()
