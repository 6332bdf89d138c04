import sys

import pytest

from karamata import core, smooth

# Frozen oracle values, computed independently of the package's integrator
# with composite Simpson rules in extended precision.
BUMP_INTEGRAL = 0.44399381616807937  # int_{-1}^{1} exp(-1/(1-x^2)) dx
BUMP_PEAK = 0.8285688398691053  # normalized kernel at 0
MOLLIFIED_TRUNCR_LOGP_AT_2 = 1.6724887197356266  # int (1+log(2-s))^+ eta(s) ds


@pytest.fixture(scope="session")
def kernel():
    return smooth.kernel_build(4)


@pytest.fixture(scope="session")
def pipelines(kernel):
    """Smooth equivalents of the catalog, built once per session."""
    out = {}
    for name, e in core.CATALOG.items():
        out[name] = smooth.smooth_equivalent(e, kernel=kernel)
    return out


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} {detail}")
