import pytest

from vlimb.model import default_vlimb


@pytest.fixture(scope="session")
def model():
    return default_vlimb()


# The scenario runs dominate the suite's wall time (a couple of minutes
# each), so they run once per session and every test shares the reports.

@pytest.fixture(scope="session")
def lift_report():
    from vlimb.scenarios import run_lift
    return run_lift(60.0)


@pytest.fixture(scope="session")
def lift_report_rerun():
    """Second independent lift run, for the byte-identical-CSV check."""
    from vlimb.scenarios import run_lift
    return run_lift(60.0)


@pytest.fixture(scope="session")
def manipulation_report():
    from vlimb.scenarios import run_manipulation
    return run_manipulation(0.575)


@pytest.fixture(scope="session")
def reachability_report():
    from vlimb.scenarios import run_reachability
    return run_reachability()
