from collections import defaultdict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> list of (label, passed, detail)
_ACCEPTANCE = defaultdict(list)

CRITERIA = {
    1: "diversity table (50-80 dB slope within 0.1)",
    2: "closed forms vs quadrature (1e-6 relative)",
    3: "Monte Carlo vs Chernoff bound and semi-analytic average",
    4: "AWGN degeneration (1e-6 relative)",
    5: "qualitative curve properties",
    6: "noise statistics (variance 1%, pdf mass 1e-6)",
    7: "CLI determinism (byte-identical CSV)",
}


@pytest.fixture
def acceptance_record():
    def record(criterion, label, passed, detail=""):
        _ACCEPTANCE[criterion].append((label, bool(passed), detail))
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(CRITERIA):
        results = _ACCEPTANCE.get(number)
        if not results:
            tr.write_line(f"criterion {number}: NOT RUN  {CRITERIA[number]}")
            continue
        failed = [r for r in results if not r[1]]
        verdict = "PASS" if not failed else "FAIL"
        tr.write_line(f"criterion {number}: {verdict}  {CRITERIA[number]} "
                      f"({len(results) - len(failed)}/{len(results)} checks)")
        for label, passed, detail in results:
            if not passed:
                tr.write_line(f"    FAIL {label}: {detail}")
