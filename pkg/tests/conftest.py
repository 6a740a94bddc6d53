import pytest

ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome and enforce its runtime budget."""
    import time

    class Criterion:
        def __init__(self):
            self.start = time.perf_counter()
            self.detail = ""

        def check(self, label, budget_s=None):
            elapsed = time.perf_counter() - self.start
            self.label, self.elapsed, self.budget = label, elapsed, budget_s
            if budget_s is not None:
                assert elapsed < budget_s, f"runtime {elapsed:.2f}s exceeds {budget_s}s"

    c = Criterion()
    yield c
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    label = getattr(c, "label", request.node.name)
    elapsed = time.perf_counter() - c.start
    ACCEPTANCE_RESULTS.append((request.node.name, "PASS" if ok else "FAIL", label, elapsed, c.detail))


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, label, elapsed, detail in sorted(ACCEPTANCE_RESULTS):
        extra = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"{status}  {label}  [{elapsed:.2f}s]{extra}")
