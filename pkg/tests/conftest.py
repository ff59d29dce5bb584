import pytest

from dckit.config import override_settings


@pytest.fixture(autouse=True)
def single_worker():
    # one worker per pool; every settings change is undone after the test
    with override_settings(threads=1):
        yield
