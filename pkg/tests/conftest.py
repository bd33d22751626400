import pytest

from retrial_qbd import ModelParams


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one line per acceptance criterion, in criterion order
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, line = RESULTS[num]
        terminalreporter.write_line(line)


@pytest.fixture
def table_params():
    """The small load-grid point used throughout (c=5, rho=0.5, lambda2/lambda1=4)."""
    return ModelParams.from_rho(5, 0.5, 4.0, 1.0, 1.0)


@pytest.fixture
def two_server():
    return ModelParams(2, 0.5, 0.5, 1.0, 1.0)
