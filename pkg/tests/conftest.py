import re

CRITERIA = {
    1: "kriging vs published means (exponential)",
    2: "kriging vs published means (nugget)",
    3: "ml_vsl parity with kriging",
    4: "ml_base gap above ml_vsl",
    5: "pconv full-mask reduction to conv",
    6: "finite-difference gradient suite",
    7: "kriging exactness and unbiasedness",
    8: "grf monte-carlo covariance validity",
    9: "metric brute-force oracles",
    10: "loss ledger and weight-decay endpoints",
    11: "reproduce byte-determinism",
}

_PAT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            m = _PAT.search(getattr(report, "nodeid", ""))
            if m:
                n = int(m.group(1))
                # any failure for a criterion beats a pass (parametrized tests)
                prev = outcomes.get(n)
                outcomes[n] = "FAIL" if status != "passed" or prev == "FAIL" else "PASS"
    for report in terminalreporter.stats.get("skipped", []):
        m = _PAT.search(getattr(report, "nodeid", ""))
        if m:
            outcomes.setdefault(int(m.group(1)), "SKIP")
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(CRITERIA):
        status = outcomes.get(n, "NOT RUN")
        terminalreporter.write_line(f"criterion {n:>2} ({CRITERIA[n]}): {status}")
