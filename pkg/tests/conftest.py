import pytest

from kfsslab import riccati


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    # compile the iteration kernel once so timed sections measure solving,
    # not JIT startup
    riccati.warmup()
